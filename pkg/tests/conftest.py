"""Pytest configuration and fixtures for finr tests."""

from pathlib import Path

import numpy as np
import pytest
import toml

from finr.backends.subnetwork import ActivationSpec, EncodingSpec, SubNetworkSpec
from finr.model import FInrModel, FInrSpec


@pytest.fixture
def rng():
    """Deterministic generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_network():
    """Factory for small sub-network specs."""

    def make(activation="sine", encoding="none", layers=2, width=8, **extra):
        act = ActivationSpec(kind=activation, **{k: v for k, v in extra.items() if k in ("omega0", "scale", "bias_k")})
        enc = EncodingSpec(
            kind=encoding, **{k: v for k, v in extra.items() if k in ("levels", "features", "base_resolution", "growth")}
        )
        return SubNetworkSpec(encoding=enc, layers=layers, width=width, activation=act)

    return make


@pytest.fixture
def tiny_model(tiny_network):
    """Factory for small 64-bit factorized models."""

    def make(mode="CP", rank=3, d=3, channels=2, domains=None, seed=0, **network):
        domains = domains or [(-1.0, 1.0)] * d
        spec = FInrSpec.uniform(mode, rank, tiny_network(**network), domains, channels)
        return FInrModel.initialize(spec, seed, np.float64)

    return make


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration dict as TOML and return its path."""

    def write(data: dict, name: str = "run.toml") -> Path:
        path = tmp_path / name
        path.write_text(toml.dumps(data), encoding="utf-8")
        return path

    return write

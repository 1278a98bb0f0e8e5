# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Univariate sub-networks.

A sub-network maps one scalar coordinate to ``output_dim`` rank columns:
encoding, ``layers`` activated hidden layers of ``width`` features, then a
linear output layer. Coordinates are mapped affinely from their axis domain
to [-1, 1] by lifting them with the map's slope, so every derivative channel
comes out in physical units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from finr.autodiff.jet import Jet2, activate, linear
from finr.autodiff.tape import Param, Tape
from finr.backends.activations import ActivationKind, resolve_activation
from finr.backends.encodings import encode, encoded_width, level_resolution
from finr.errors import CapabilityError
from finr.trainer.rng import generator

SINE_FAMILY = ("sine", "gabor", "finer")


class EncodingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["none", "fourier", "featuregrid"] = "none"
    levels: int = Field(default=8, ge=1, description="Fourier octaves or grid levels")
    features: int = Field(default=2, ge=1, description="Features per grid level")
    base_resolution: int = Field(default=16, ge=1)
    growth: float = Field(default=1.5, ge=1.0)

    @property
    def width(self) -> int:
        return encoded_width(self.kind, self.levels, self.features)


class ActivationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["relu", "tanh", "sine", "gabor", "finer", "gauss"] = "sine"
    omega0: float = Field(default=30.0, gt=0.0, description="Frequency of sine-family kinds")
    scale: float = Field(default=10.0, gt=0.0, description="Gaussian width for gabor/gauss")
    bias_k: float = Field(default=1.0, gt=0.0, description="First-layer bias range for finer")

    def resolve(self) -> ActivationKind:
        return resolve_activation(self.kind, self.omega0, self.scale)


class SubNetworkSpec(BaseModel):
    """Shape and backend of one per-axis network."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    encoding: EncodingSpec = Field(default_factory=EncodingSpec)
    layers: int = Field(default=4, ge=1)
    width: int = Field(default=256, ge=1)
    activation: ActivationSpec = Field(default_factory=ActivationSpec)
    output_dim: int = Field(default=1, ge=1)

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.encoding.width] + [self.width] * self.layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class SubNetworkParams:
    """Parameters of one sub-network in a stable order."""

    weights: list[Param]
    biases: list[Param]
    tables: list[Param] = field(default_factory=list)

    def params(self) -> list[Param]:
        layered = [p for pair in zip(self.weights, self.biases) for p in pair]
        return [*self.tables, *layered]

    @property
    def size(self) -> int:
        return sum(p.size for p in self.params())


def _weight_bound(spec: SubNetworkSpec, layer: int, fan_in: int, fan_out: int) -> float:
    kind = spec.activation.kind
    if kind in SINE_FAMILY:
        if layer == 0:
            return 1.0 / fan_in
        return math.sqrt(6.0 / fan_in) / spec.activation.omega0
    return math.sqrt(6.0 / (fan_in + fan_out))


def _bias_bound(spec: SubNetworkSpec, layer: int, fan_in: int) -> float:
    if spec.activation.kind == "finer" and layer == 0:
        return spec.activation.bias_k
    return 1.0 / math.sqrt(fan_in)


def init_subnetwork(
    spec: SubNetworkSpec,
    seed: int,
    *,
    prefix: str = "net",
    dtype=np.float64,
    stream: Sequence[int] = (),
) -> SubNetworkParams:
    """Draw fresh parameters; identical (spec, seed, stream) give identical values."""
    rng = generator(seed, *stream)
    tables = []
    if spec.encoding.kind == "featuregrid":
        enc = spec.encoding
        for level in range(enc.levels):
            res = level_resolution(level, enc.base_resolution, enc.growth)
            tables.append(
                Param(
                    f"{prefix}.grid{level}",
                    rng.uniform(-1e-4, 1e-4, size=(res + 1, enc.features)).astype(dtype),
                    role="encoding-table",
                )
            )

    weights, biases = [], []
    for layer, (fan_in, fan_out) in enumerate(spec.layer_dims()):
        w = _weight_bound(spec, layer, fan_in, fan_out)
        b = _bias_bound(spec, layer, fan_in)
        weights.append(
            Param(
                f"{prefix}.layer{layer}.weight",
                rng.uniform(-w, w, size=(fan_in, fan_out)).astype(dtype),
                role="weight",
            )
        )
        biases.append(
            Param(
                f"{prefix}.layer{layer}.bias",
                rng.uniform(-b, b, size=(fan_out,)).astype(dtype),
                role="bias",
            )
        )
    return SubNetworkParams(weights, biases, tables)


def check_capability(spec: SubNetworkSpec, jet_order: int) -> None:
    if jet_order not in (0, 1, 2):
        raise CapabilityError(f"jet order must be 0, 1 or 2, got {jet_order}")
    if spec.encoding.kind == "featuregrid" and jet_order >= 2:
        raise CapabilityError(
            "featuregrid encodings are piecewise linear and cannot supply second derivatives"
        )
    activation = spec.activation.resolve()
    if activation.max_order < jet_order + 1:
        raise CapabilityError(
            f"activation {activation.name!r} cannot provide derivatives of order {jet_order + 1}"
        )


def normalizer(domain: tuple[float, float]) -> tuple[float, float]:
    """Slope and offset of the affine map from ``domain`` onto [-1, 1]."""
    lo, hi = float(domain[0]), float(domain[1])
    slope = 2.0 / (hi - lo)
    return slope, -1.0 - slope * lo


def mlp(jet: Jet2, weights: Sequence, biases: Sequence, activation: ActivationKind) -> Jet2:
    """Activated hidden layers followed by one linear output layer."""
    for w, b in zip(weights[:-1], biases[:-1]):
        jet = activate(linear(jet, w, b), activation)
    return linear(jet, weights[-1], biases[-1])


def forward_axis(
    params: SubNetworkParams,
    spec: SubNetworkSpec,
    xs,
    jet_order: int = 0,
    *,
    tape: Optional[Tape] = None,
    domain: tuple[float, float] = (-1.0, 1.0),
) -> Jet2:
    """Evaluate the sub-network at every coordinate in ``xs``.

    Returns a jet of shape ``(len(xs), output_dim)``; channels are tape nodes
    when ``tape`` is given and numpy arrays otherwise.
    """
    check_capability(spec, jet_order)
    xs = np.asarray(xs, dtype=params.weights[0].value.dtype).reshape(-1, 1)
    slope, offset = normalizer(domain)
    jet = Jet2.lift(xs, jet_order, slope=slope, offset=offset)

    bind = (lambda p: tape.param(p)) if tape is not None else (lambda p: p.value)
    jet = encode(jet, spec.encoding, [bind(t) for t in params.tables])
    weights = [bind(w) for w in params.weights]
    biases = [bind(b) for b in params.biases]
    return mlp(jet, weights, biases, spec.activation.resolve())

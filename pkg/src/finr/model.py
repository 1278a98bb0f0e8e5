# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Factorized implicit neural representations.

An FInrModel binds one univariate sub-network per input axis, plus a channel
mixer (CP/TT) or a core tensor (TU), and composes their outputs with the
kernels in ``finr.core.factors``. Input derivatives follow from the product
rule: the partial w.r.t. axis k is the composition with axis k's factor
replaced by its derivative channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from finr.autodiff import tape as ops
from finr.autodiff.jet import Jet2
from finr.autodiff.tape import Param, Tape
from finr.backends.encodings import encode
from finr.backends.subnetwork import (
    EncodingSpec,
    SubNetworkParams,
    SubNetworkSpec,
    _bias_bound,
    _weight_bound,
    check_capability,
    forward_axis,
    init_subnetwork,
    mlp,
    normalizer,
)
from finr.core.dense import MAX_MODES, DenseTensor
from finr.core.factors import compose_grid, compose_points
from finr.errors import CapabilityError, InputError, ShapeError
from finr.trainer.rng import INIT, generator

Domain = tuple[float, float]


class FInrSpec(BaseModel):
    """Mode, ranks, per-axis networks and axis domains of a factorized model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Literal["CP", "TT", "TU"] = "CP"
    ranks: tuple[int, ...] = Field(description="CP: (R,); TT: d-1 bond ranks; TU: (R1..Rd)")
    channels: int = Field(default=1, ge=1)
    networks: tuple[SubNetworkSpec, ...]
    domains: tuple[Domain, ...]

    @model_validator(mode="after")
    def _check(self) -> "FInrSpec":
        d = len(self.domains)
        if d < 2 or d + 1 > MAX_MODES:
            raise ValueError(f"input dimension must be between 2 and {MAX_MODES - 1}, got {d}")
        if len(self.networks) != d:
            raise ValueError(f"expected {d} axis networks, got {len(self.networks)}")
        for k, (lo, hi) in enumerate(self.domains):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise ValueError(f"axis {k} domain ({lo}, {hi}) is degenerate")
        expected = {"CP": 1, "TT": d - 1, "TU": d}[self.mode]
        if len(self.ranks) != expected:
            raise ValueError(f"{self.mode} needs {expected} ranks for d={d}, got {len(self.ranks)}")
        if any(r < 1 for r in self.ranks):
            raise ValueError("ranks must be positive")
        return self

    @classmethod
    def uniform(
        cls,
        mode: str,
        rank: int,
        network: SubNetworkSpec,
        domains: Sequence[Domain],
        channels: int = 1,
    ) -> "FInrSpec":
        """Same network on every axis and one rank everywhere."""
        d = len(domains)
        count = {"CP": 1, "TT": d - 1, "TU": d}.get(mode, 1)
        return cls(
            mode=mode,
            ranks=(rank,) * count,
            channels=channels,
            networks=(network,) * d,
            domains=tuple(tuple(map(float, dom)) for dom in domains),
        )

    @property
    def d(self) -> int:
        return len(self.domains)

    def axis_outputs(self) -> list[int]:
        """Columns each axis network emits."""
        d = self.d
        if self.mode == "CP":
            return [self.ranks[0]] * d
        if self.mode == "TU":
            return list(self.ranks)
        bonds = self.ranks
        return [bonds[0], *(bonds[k - 1] * bonds[k] for k in range(1, d - 1)), bonds[-1]]

    def axis_specs(self) -> list[SubNetworkSpec]:
        return [
            net.model_copy(update={"output_dim": out})
            for net, out in zip(self.networks, self.axis_outputs())
        ]

    def mixer_shape(self) -> Optional[tuple[int, int]]:
        if self.mode == "TU":
            return None
        return (self.ranks[-1], self.channels)

    def core_shape(self) -> Optional[tuple[int, ...]]:
        if self.mode != "TU":
            return None
        return (*self.ranks, self.channels)


@dataclass
class FieldEvaluation:
    """Composed values with optional per-axis first and second partials.

    Entries are numpy arrays or tape nodes depending on how the model was
    evaluated. ``grads[k]``/``second[k]`` are None below the requested order.
    """

    value: object
    grads: list = field(default_factory=list)
    second: list = field(default_factory=list)

    def laplacian(self, axes: Optional[Sequence[int]] = None):
        if not self.second:
            raise CapabilityError("second derivatives were not requested")
        axes = range(len(self.second)) if axes is None else axes
        total = None
        for k in axes:
            total = self.second[k] if total is None else ops.add(total, self.second[k])
        return total

    def tensor(self) -> DenseTensor:
        value = self.value.value if isinstance(self.value, ops.Node) else self.value
        return DenseTensor(value)


@dataclass
class FInrModel:
    """Per-axis sub-networks bound into one factorized model."""

    spec: FInrSpec
    nets: list[SubNetworkParams]
    channel_mix: Optional[Param] = None
    core: Optional[Param] = None

    @classmethod
    def initialize(cls, spec: FInrSpec, seed: int, dtype=np.float64) -> "FInrModel":
        nets = [
            init_subnetwork(net, seed, prefix=f"axis{k}", dtype=dtype, stream=(INIT, k))
            for k, net in enumerate(spec.axis_specs())
        ]
        rng = generator(seed, INIT, MAX_MODES)
        mix = core = None
        if spec.mode == "TU":
            shape = spec.core_shape()
            bound = 1.0 / math.sqrt(math.prod(spec.ranks))
            core = Param("core", rng.uniform(-bound, bound, size=shape).astype(dtype), role="core")
        else:
            shape = spec.mixer_shape()
            bound = 1.0 / math.sqrt(shape[0])
            mix = Param(
                "channel_mix", rng.uniform(-bound, bound, size=shape).astype(dtype), role="channel-mix"
            )
        return cls(spec, nets, mix, core)

    @property
    def dtype(self):
        return self.nets[0].weights[0].value.dtype

    def params(self) -> list[Param]:
        params = [p for net in self.nets for p in net.params()]
        params.extend(p for p in (self.channel_mix, self.core) if p is not None)
        return params

    def check_capability(self, jet_order: int) -> None:
        for net in self.spec.networks:
            check_capability(net, jet_order)


def param_count(model) -> int:
    """Exact number of trainable scalars, cores, mixers and tables included."""
    return sum(p.size for p in model.params())


def _check_coords(xs, domain: Domain, axis: int) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(xs)):
        raise InputError(f"non-finite coordinate on axis {axis}")
    lo, hi = domain
    slack = 1e-9 * (hi - lo)
    if xs.size and (xs.min() < lo - slack or xs.max() > hi + slack):
        raise InputError(
            f"axis {axis} coordinates [{xs.min():g}, {xs.max():g}] leave the domain [{lo:g}, {hi:g}]"
        )
    return xs


def _axis_rows(model: FInrModel, k: int, xs, jet_order: int, tape: Optional[Tape]) -> Jet2:
    """Axis k's factor rows, one per coordinate; TT interiors as (P, Rp, Rn)."""
    spec = model.spec
    xs = _check_coords(xs, spec.domains[k], k)
    net_spec = spec.axis_specs()[k]
    jet = forward_axis(model.nets[k], net_spec, xs, jet_order, tape=tape, domain=spec.domains[k])
    if spec.mode == "TT" and 0 < k < spec.d - 1:
        shape = (xs.size, spec.ranks[k - 1], spec.ranks[k])
        jet = jet.map(lambda c: ops.reshape(c, shape))
    return jet


def _bind(model: FInrModel, tape: Optional[Tape]):
    def bind(p):
        if p is None:
            return None
        return tape.param(p) if tape is not None else p.value

    return bind(model.channel_mix), bind(model.core)


def _substituted(compose, jets: Sequence[Jet2], order: int) -> FieldEvaluation:
    values = [j.value for j in jets]
    result = FieldEvaluation(compose(values))
    for k, jet in enumerate(jets):
        if order >= 1:
            result.grads.append(compose([*values[:k], jet.d1, *values[k + 1 :]]))
        if order >= 2:
            result.second.append(compose([*values[:k], jet.d2, *values[k + 1 :]]))
    return result


def factor_jets(
    model: FInrModel, axis_coords: Sequence, jet_order: int = 0, *, tape: Optional[Tape] = None
) -> list[Jet2]:
    """Run every axis network once over its coordinates, in factor-set layout."""
    if len(axis_coords) != model.spec.d:
        raise ShapeError(f"expected {model.spec.d} coordinate lists, got {len(axis_coords)}")
    jets = []
    for k, xs in enumerate(axis_coords):
        jet = _axis_rows(model, k, xs, jet_order, tape)
        if len(jet.value.shape) == 3:
            jet = jet.map(lambda c: ops.transpose(c, (1, 0, 2)))
        jets.append(jet)
    return jets


def eval_grid(
    model: AnyModel, axis_coords: Sequence, jet_order: int = 0, *, tape: Optional[Tape] = None
) -> FieldEvaluation:
    """Values on the tensor-product grid ``N1 x ... x Nd x C`` with N*d network calls."""
    if isinstance(model, MonolithicModel):
        return model.field_grid(axis_coords, jet_order, tape=tape)
    jets = factor_jets(model, axis_coords, jet_order, tape=tape)
    mix, core = _bind(model, tape)
    mode = model.spec.mode

    def compose(factors):
        return compose_grid(mode, factors, mix, core, ops.einsum)

    return _substituted(compose, jets, jet_order)


def eval_points(
    model: AnyModel, points, jet_order: int = 0, *, tape: Optional[Tape] = None
) -> FieldEvaluation:
    """Values at scattered ``P x d`` points, each axis network evaluated per point."""
    if isinstance(model, MonolithicModel):
        return model.field_points(points, jet_order, tape=tape)
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != model.spec.d:
        raise ShapeError(f"points must be P x {model.spec.d}, got {points.shape}")
    jets = [_axis_rows(model, k, points[:, k], jet_order, tape) for k in range(model.spec.d)]
    return _compose_rows(model, jets, jet_order, tape)


def eval_indexed(
    model: AnyModel,
    axis_coords: Sequence,
    indices,
    jet_order: int = 0,
    *,
    tape: Optional[Tape] = None,
) -> FieldEvaluation:
    """Values at grid entries ``indices`` (P x d) without composing the whole grid."""
    indices = np.asarray(indices, dtype=np.int64)
    if isinstance(model, MonolithicModel):
        columns = [np.asarray(xs, dtype=np.float64).reshape(-1)[indices[:, k]] for k, xs in enumerate(axis_coords)]
        points = np.stack(columns, axis=1)
        return model.field_points(points, jet_order, tape=tape)
    jets = []
    for k, xs in enumerate(axis_coords):
        rows = _axis_rows(model, k, xs, jet_order, tape)
        jets.append(rows.map(lambda c, k=k: ops.take(c, indices[:, k], axis=0)))
    return _compose_rows(model, jets, jet_order, tape)


def _compose_rows(model, jets, jet_order, tape) -> FieldEvaluation:
    mix, core = _bind(model, tape)
    mode = model.spec.mode

    def compose(rows):
        return compose_points(mode, rows, mix, core, ops.einsum)

    return _substituted(compose, jets, jet_order)


def clamp_coords(model, axis_coords: Sequence) -> tuple[list[np.ndarray], int]:
    """Clip coordinates into each axis domain; returns the clipped lists and how many moved."""
    clipped, moved = [], 0
    for xs, (lo, hi) in zip(axis_coords, model.spec.domains):
        xs = np.asarray(xs, dtype=np.float64)
        inside = np.clip(xs, lo, hi)
        moved += int(np.count_nonzero(inside != xs))
        clipped.append(inside)
    return clipped, moved


# --- Coordinate-MLP baseline -------------------------------------------------


class MonolithicSpec(BaseModel):
    """One network over all d coordinates."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    network: SubNetworkSpec
    channels: int = Field(default=1, ge=1)
    domains: tuple[Domain, ...]

    @property
    def d(self) -> int:
        return len(self.domains)

    @property
    def networks(self) -> tuple[SubNetworkSpec, ...]:
        return (self.network,)

    @model_validator(mode="after")
    def _check(self) -> "MonolithicSpec":
        if self.network.encoding.kind == "featuregrid":
            raise ValueError("the coordinate MLP baseline supports 'none' and 'fourier' encodings")
        return self

    def input_width(self) -> int:
        return self.d * self.network.encoding.width

    def layer_dims(self) -> list[tuple[int, int]]:
        net = self.network
        dims = [self.input_width()] + [net.width] * net.layers + [self.channels]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class MonolithicModel:
    """Coordinate MLP over the full input, evaluated at every grid point."""

    spec: MonolithicSpec
    weights: list[Param]
    biases: list[Param]

    @classmethod
    def initialize(cls, spec: MonolithicSpec, seed: int, dtype=np.float64) -> "MonolithicModel":
        rng = generator(seed, INIT)
        net = spec.network
        weights, biases = [], []
        for layer, (fan_in, fan_out) in enumerate(spec.layer_dims()):
            w = _weight_bound(net, layer, fan_in, fan_out)
            b = _bias_bound(net, layer, fan_in)
            weights.append(
                Param(f"mlp.layer{layer}.weight", rng.uniform(-w, w, (fan_in, fan_out)).astype(dtype))
            )
            biases.append(
                Param(f"mlp.layer{layer}.bias", rng.uniform(-b, b, (fan_out,)).astype(dtype), role="bias")
            )
        return cls(spec, weights, biases)

    @property
    def dtype(self):
        return self.weights[0].value.dtype

    def params(self) -> list[Param]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def check_capability(self, jet_order: int) -> None:
        check_capability(self.spec.network, jet_order)

    def _features(self, points: np.ndarray, jet_order: int, direction: int) -> Jet2:
        """Encoded inputs as one jet along ``direction``; other axes carry zero derivatives."""
        channels = []
        for k, domain in enumerate(self.spec.domains):
            slope, offset = normalizer(domain)
            jet = Jet2.lift(points[:, k : k + 1], jet_order, slope=slope, offset=offset)
            if k != direction and jet_order > 0:
                zero = np.zeros_like(jet.value)
                jet = Jet2(jet.value, zero, zero if jet_order == 2 else None)
            channels.append(encode(jet, self.spec.network.encoding))
        return Jet2(
            np.concatenate([j.value for j in channels], axis=1),
            None if jet_order < 1 else np.concatenate([j.d1 for j in channels], axis=1),
            None if jet_order < 2 else np.concatenate([j.d2 for j in channels], axis=1),
        )

    def field_points(self, points, jet_order: int = 0, *, tape: Optional[Tape] = None) -> FieldEvaluation:
        """Values (and per-axis partials) at ``P x d`` points, one network pass per direction."""
        self.check_capability(jet_order)
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != self.spec.d:
            raise ShapeError(f"points must be P x {self.spec.d}, got {points.shape}")
        for k, domain in enumerate(self.spec.domains):
            _check_coords(points[:, k], domain, k)
        points = points.astype(self.dtype)

        bind = (lambda p: tape.param(p)) if tape is not None else (lambda p: p.value)
        weights = [bind(w) for w in self.weights]
        biases = [bind(b) for b in self.biases]
        activation = self.spec.network.activation.resolve()
        if jet_order == 0:
            return FieldEvaluation(mlp(self._features(points, 0, 0), weights, biases, activation).value)

        result = None
        for k in range(self.spec.d):
            jet = mlp(self._features(points, jet_order, k), weights, biases, activation)
            if result is None:
                result = FieldEvaluation(jet.value)
            result.grads.append(jet.d1)
            if jet_order == 2:
                result.second.append(jet.d2)
        return result

    def field_grid(
        self, axis_coords: Sequence, jet_order: int = 0, *, tape: Optional[Tape] = None
    ) -> FieldEvaluation:
        """Every grid point through the network, reshaped to ``N1 x ... x Nd x C``."""
        if len(axis_coords) != self.spec.d:
            raise ShapeError(f"expected {self.spec.d} coordinate lists, got {len(axis_coords)}")
        mesh = np.meshgrid(*[np.asarray(xs, dtype=np.float64).reshape(-1) for xs in axis_coords], indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        shape = (*mesh[0].shape, self.spec.channels)
        flat = self.field_points(points, jet_order, tape=tape)
        return FieldEvaluation(
            ops.reshape(flat.value, shape),
            [ops.reshape(g, shape) for g in flat.grads],
            [ops.reshape(s, shape) for s in flat.second],
        )

    def eval_points(self, points, *, tape: Optional[Tape] = None):
        return self.field_points(points, tape=tape).value

    def eval_grid(self, axis_coords: Sequence, *, tape: Optional[Tape] = None):
        return self.field_grid(axis_coords, tape=tape).value


AnyModel = Union[FInrModel, MonolithicModel]


def initialize_model(spec: Union[FInrSpec, MonolithicSpec], seed: int, dtype=np.float64) -> AnyModel:
    """Fresh factorized model or coordinate-MLP baseline, whichever ``spec`` describes."""
    if isinstance(spec, MonolithicSpec):
        return MonolithicModel.initialize(spec, seed, dtype)
    return FInrModel.initialize(spec, seed, dtype)


def monolithic_equivalent(spec: FInrSpec) -> MonolithicSpec:
    """Baseline with the same neuron budget: hidden width is the sum of axis widths."""
    first = spec.networks[0]
    encoding = first.encoding if first.encoding.kind != "featuregrid" else EncodingSpec()
    network = SubNetworkSpec(
        encoding=encoding,
        layers=max(net.layers for net in spec.networks),
        width=sum(net.width for net in spec.networks),
        activation=first.activation,
        output_dim=spec.channels,
    )
    return MonolithicSpec(network=network, channels=spec.channels, domains=spec.domains)


# --- Complexity accounting ---------------------------------------------------


@dataclass(frozen=True)
class ComplexityEstimate:
    """Predicted multiply-accumulate count of one full-grid forward on n^d points."""

    mode: str
    n: int
    m: int
    l: int
    r: int
    d: int
    macs: int


def predict_cost(
    spec: Union[FInrSpec, str], n: int, m: int, l: int, r: int, d: Optional[int] = None
) -> ComplexityEstimate:
    """Forward cost of a full n^d grid.

    monolithic m^2 l n^d; CP m^2 l n r + n^(d-1) r^2; TT m^2 l n r^2 + n^(d-1) r^2;
    TU m^2 l n r + r n^d. For d=3 these are the usual n x n x n table rows.
    """
    if isinstance(spec, FInrSpec):
        mode, d = spec.mode, spec.d if d is None else d
    else:
        mode = spec
    d = 3 if d is None else d
    base = m * m * l * n
    if mode == "monolithic":
        macs = m * m * l * n**d
    elif mode == "CP":
        macs = base * r + n ** (d - 1) * r * r
    elif mode == "TT":
        macs = base * r * r + n ** (d - 1) * r * r
    elif mode == "TU":
        macs = base * r + r * n**d
    else:
        raise ShapeError(f"unknown mode {mode!r}")
    return ComplexityEstimate(mode, n, m, l, r, d, int(macs))

# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Factor sets and the three decomposition-composition kernels.

Index conventions (row-major throughout):

* CP   out[i1..id, c] = sum_r prod_k A_k[ik, r] * M[r, c]
* TT   out[i1..id, c] = sum_{b1..b(d-1)} A_1[i1, b1] * G_2[b1, i2, b2] * ...
                        * A_d[id, b(d-1)] * M[b(d-1), c]
       i.e. the chain is contracted left to right and the channel mixer
       shares the last bond with the tail factor.
* TU   out[i1..id, c] = sum_{r1..rd} C[r1..rd, c] * prod_k A_k[ik, rk]

The kernels are written against a ``contract(subscripts, *operands)``
callable so the same code runs on numpy arrays and on autodiff tape nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from finr.core.dense import MAX_MODES, DenseTensor
from finr.errors import ShapeError

Mode = Literal["CP", "TT", "TU"]
MODES: tuple[str, ...] = ("CP", "TT", "TU")

Contract = Callable[..., object]

_AXES = "abcdef"
_RANKS = "ghijkl"
_CHANNEL = "z"


def numpy_contract(subscripts: str, *operands):
    return np.einsum(subscripts, *operands, optimize=True)


def factor_ranks(mode: str, factors: Sequence, mix=None, core=None) -> tuple[int, ...]:
    """Validate factor extents for ``mode`` and return the rank tuple.

    CP returns ``(R,)``, TT the ``d - 1`` bond ranks, TU ``(R1, ..., Rd)``.
    """
    d = len(factors)
    if d < 2 or d + 1 > MAX_MODES:
        raise ShapeError(f"need between 2 and {MAX_MODES - 1} axes, got {d}")

    if mode == "CP":
        if core is not None:
            raise ShapeError("CP factor sets carry no core")
        if any(len(f.shape) != 2 for f in factors):
            raise ShapeError("CP axis factors must be matrices")
        ranks = {f.shape[1] for f in factors}
        if len(ranks) != 1:
            raise ShapeError(f"CP rank mismatch across axes: {sorted(ranks)}")
        rank = ranks.pop()
        _check_mix(mix, rank)
        return (rank,)

    if mode == "TT":
        if core is not None:
            raise ShapeError("TT factor sets carry no core")
        head, tail = factors[0], factors[-1]
        if len(head.shape) != 2 or len(tail.shape) != 2:
            raise ShapeError("TT boundary factors must be matrices")
        bonds = [head.shape[1]]
        for k, interior in enumerate(factors[1:-1], start=1):
            if len(interior.shape) != 3:
                raise ShapeError(f"TT interior factor {k} must be order 3")
            if interior.shape[0] != bonds[-1]:
                raise ShapeError(
                    f"TT rank mismatch between axes {k - 1} and {k}: "
                    f"{bonds[-1]} != {interior.shape[0]}"
                )
            bonds.append(interior.shape[2])
        if tail.shape[1] != bonds[-1]:
            raise ShapeError(
                f"TT rank mismatch at the tail: {bonds[-1]} != {tail.shape[1]}"
            )
        _check_mix(mix, bonds[-1])
        return tuple(bonds)

    if mode == "TU":
        if mix is not None:
            raise ShapeError("Tucker factor sets carry no channel mixer")
        if core is None:
            raise ShapeError("Tucker factor sets need a core")
        if any(len(f.shape) != 2 for f in factors):
            raise ShapeError("Tucker axis factors must be matrices")
        ranks = tuple(f.shape[1] for f in factors)
        if len(core.shape) != d + 1 or tuple(core.shape[:d]) != ranks:
            raise ShapeError(f"Tucker core shape {tuple(core.shape)} does not match ranks {ranks}")
        return ranks

    raise ShapeError(f"unknown mode {mode!r}")


def _check_mix(mix, rank: int) -> None:
    if mix is None:
        raise ShapeError("channel mixer required")
    if len(mix.shape) != 2 or mix.shape[0] != rank:
        raise ShapeError(f"channel mixer shape {tuple(mix.shape)} does not match rank {rank}")


def _channels(mode: str, mix, core) -> int:
    return core.shape[-1] if mode == "TU" else mix.shape[1]


def compose_grid(mode: str, factors: Sequence, mix=None, core=None, contract: Contract = numpy_contract):
    """Compose axis factors into the full ``N1 x ... x Nd x C`` grid."""
    factor_ranks(mode, factors, mix, core)
    d = len(factors)
    axes = _AXES[:d]

    if mode == "CP":
        acc, acc_sub = factors[0], axes[0]
        for k in range(1, d - 1):
            acc = contract(f"{acc_sub}r,{axes[k]}r->{acc_sub}{axes[k]}r", acc, factors[k])
            acc_sub += axes[k]
        last = axes[-1]
        tail = contract(f"{last}r,r{_CHANNEL}->{last}r{_CHANNEL}", factors[-1], mix)
        return contract(f"{acc_sub}r,{last}r{_CHANNEL}->{acc_sub}{last}{_CHANNEL}", acc, tail)

    if mode == "TT":
        acc, acc_sub, bond = factors[0], axes[0], _RANKS[0]
        for k in range(1, d - 1):
            nxt = _RANKS[k]
            acc = contract(
                f"{acc_sub}{bond},{bond}{axes[k]}{nxt}->{acc_sub}{axes[k]}{nxt}",
                acc,
                factors[k],
            )
            acc_sub += axes[k]
            bond = nxt
        last = axes[-1]
        tail = contract(f"{last}{bond},{bond}{_CHANNEL}->{last}{bond}{_CHANNEL}", factors[-1], mix)
        return contract(
            f"{acc_sub}{bond},{last}{bond}{_CHANNEL}->{acc_sub}{last}{_CHANNEL}", acc, tail
        )

    ranks = _RANKS[:d]
    acc, acc_sub = core, ranks + _CHANNEL
    for k in range(d):
        new_sub = acc_sub.replace(ranks[k], axes[k])
        acc = contract(f"{axes[k]}{ranks[k]},{acc_sub}->{new_sub}", factors[k], acc)
        acc_sub = new_sub
    return acc


def compose_points(mode: str, rows: Sequence, mix=None, core=None, contract: Contract = numpy_contract):
    """Compose per-point factor rows into a ``P x C`` matrix.

    ``rows[k]`` holds one row per point: ``P x R`` for matrix factors and
    ``P x R_prev x R_next`` for TT interior cores.
    """
    _check_rows(mode, rows, mix, core)
    d = len(rows)

    if mode == "CP":
        acc = rows[0]
        for k in range(1, d):
            acc = contract("pr,pr->pr", acc, rows[k])
        return contract(f"pr,r{_CHANNEL}->p{_CHANNEL}", acc, mix)

    if mode == "TT":
        acc, bond = rows[0], _RANKS[0]
        for k in range(1, d - 1):
            nxt = _RANKS[k]
            acc = contract(f"p{bond},p{bond}{nxt}->p{nxt}", acc, rows[k])
            bond = nxt
        acc = contract(f"p{bond},p{bond}->p{bond}", acc, rows[-1])
        return contract(f"p{bond},{bond}{_CHANNEL}->p{_CHANNEL}", acc, mix)

    ranks = _RANKS[:d]
    rest = ranks[1:]
    acc = contract(f"p{ranks[0]},{ranks}{_CHANNEL}->p{rest}{_CHANNEL}", rows[0], core)
    for k in range(1, d):
        remaining = rest.replace(ranks[k], "")
        acc = contract(
            f"p{ranks[k]},p{rest}{_CHANNEL}->p{remaining}{_CHANNEL}", rows[k], acc
        )
        rest = remaining
    return acc


def _check_rows(mode: str, rows: Sequence, mix, core) -> None:
    # Rows validate like a factor set whose axis extents are the point count.
    if len({r.shape[0] for r in rows}) != 1:
        raise ShapeError("all factor rows must cover the same number of points")
    if mode == "TT":
        standin = [rows[0], *[_SwapShape(r.shape) for r in rows[1:-1]], rows[-1]]
        factor_ranks(mode, standin, mix, core)
    else:
        factor_ranks(mode, rows, mix, core)


class _SwapShape:
    """Shape-only view of a ``P x Rp x Rn`` row block in ``Rp x P x Rn`` order."""

    def __init__(self, shape):
        self.shape = (shape[1], shape[0], *shape[2:]) if len(shape) == 3 else tuple(shape)


@dataclass(frozen=True, eq=False)
class FactorSet:
    """Axis factors plus channel mixer (CP/TT) or core (TU)."""

    mode: str
    axis_factors: tuple
    channel_mix: Optional[np.ndarray] = None
    core: Optional[np.ndarray] = None

    def __post_init__(self):
        factors = tuple(np.asarray(f) for f in self.axis_factors)
        object.__setattr__(self, "axis_factors", factors)
        if self.channel_mix is not None:
            object.__setattr__(self, "channel_mix", np.asarray(self.channel_mix))
        if self.core is not None:
            object.__setattr__(self, "core", np.asarray(self.core))
        object.__setattr__(
            self, "_ranks", factor_ranks(self.mode, factors, self.channel_mix, self.core)
        )

    @property
    def ranks(self) -> tuple[int, ...]:
        return self._ranks

    @property
    def d(self) -> int:
        return len(self.axis_factors)

    @property
    def channels(self) -> int:
        return _channels(self.mode, self.channel_mix, self.core)

    @property
    def extents(self) -> tuple[int, ...]:
        extents = []
        for k, f in enumerate(self.axis_factors):
            interior = self.mode == "TT" and 0 < k < self.d - 1
            extents.append(f.shape[1] if interior else f.shape[0])
        return tuple(extents)


def _require_mode(fs: FactorSet, mode: str) -> None:
    if fs.mode != mode:
        raise ShapeError(f"expected a {mode} factor set, got {fs.mode}")


def compose(fs: FactorSet) -> DenseTensor:
    return DenseTensor(compose_grid(fs.mode, fs.axis_factors, fs.channel_mix, fs.core))


def cp_compose(fs: FactorSet) -> DenseTensor:
    _require_mode(fs, "CP")
    return compose(fs)


def tt_compose(fs: FactorSet) -> DenseTensor:
    _require_mode(fs, "TT")
    return compose(fs)


def tucker_compose(fs: FactorSet) -> DenseTensor:
    _require_mode(fs, "TU")
    return compose(fs)


def contract_point(fs: FactorSet, rows: Sequence) -> np.ndarray:
    """Composed C-vector at one index tuple, given one factor row per axis.

    For TT interior axes the row is the ``R_prev x R_next`` slice matrix.
    """
    if len(rows) != fs.d:
        raise ShapeError(f"expected {fs.d} rows, got {len(rows)}")
    batched = [np.asarray(r)[np.newaxis] for r in rows]
    return compose_points(fs.mode, batched, fs.channel_mix, fs.core)[0]


def factor_rows(fs: FactorSet, index: Sequence[int]) -> list[np.ndarray]:
    """Rows of every axis factor at ``index`` (TT interior: slice matrices)."""
    rows = []
    for k, (f, i) in enumerate(zip(fs.axis_factors, index)):
        interior = fs.mode == "TT" and 0 < k < fs.d - 1
        rows.append(f[:, i, :] if interior else f[i])
    return rows


def reference_compose(fs: FactorSet) -> DenseTensor:
    """Brute-force oracle: explicit loops over every output index and rank tuple."""
    extents = fs.extents
    channels = fs.channels
    d = fs.d
    out = np.zeros(extents + (channels,), dtype=np.float64)
    factors = fs.axis_factors

    for index in itertools.product(*(range(n) for n in extents)):
        for c in range(channels):
            total = 0.0
            if fs.mode == "CP":
                for r in range(fs.ranks[0]):
                    term = float(fs.channel_mix[r, c])
                    for k in range(d):
                        term *= float(factors[k][index[k], r])
                    total += term
            elif fs.mode == "TT":
                for bonds in itertools.product(*(range(b) for b in fs.ranks)):
                    term = float(factors[0][index[0], bonds[0]])
                    for k in range(1, d - 1):
                        term *= float(factors[k][bonds[k - 1], index[k], bonds[k]])
                    term *= float(factors[-1][index[-1], bonds[-1]])
                    term *= float(fs.channel_mix[bonds[-1], c])
                    total += term
            else:
                for ranks in itertools.product(*(range(r) for r in fs.ranks)):
                    term = float(fs.core[ranks + (c,)])
                    for k in range(d):
                        term *= float(factors[k][index[k], ranks[k]])
                    total += term
            out[index + (c,)] = total
    return DenseTensor(out)

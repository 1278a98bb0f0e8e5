# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Input encodings for a single normalized coordinate.

Both encodings take a Jet2 whose value is the coordinate mapped to [-1, 1]
and return a feature jet. Fourier features are closed-form, so their jets are
exact constants; feature grids interpolate learnable tables and are
piecewise linear in the coordinate.
"""

from __future__ import annotations

import math

import numpy as np

from finr.autodiff import tape as ops
from finr.autodiff.jet import Jet2
from finr.errors import InputError


def level_resolution(level: int, base_resolution: int, growth: float) -> int:
    return int(math.floor(base_resolution * growth**level))


def encoded_width(kind: str, levels: int, features: int) -> int:
    if kind == "fourier":
        return 2 * levels
    if kind == "featuregrid":
        return levels * features
    return 1


def fourier(jet: Jet2, levels: int) -> Jet2:
    """Interleaved (sin 2^k pi u, cos 2^k pi u) pairs for k = 0..levels-1."""
    u = np.asarray(jet.value)
    freqs = np.repeat(np.pi * 2.0 ** np.arange(levels), 2).astype(u.dtype)
    phase = u * freqs
    is_sin = np.tile([True, False], levels)

    value = np.where(is_sin, np.sin(phase), np.cos(phase))
    if jet.order == 0:
        return Jet2(value)
    # f' and f'' of sin/cos(c u) w.r.t. u
    slope = np.where(is_sin, np.cos(phase), -np.sin(phase)) * freqs
    curvature = -value * freqs * freqs
    u1 = np.asarray(jet.d1)
    d1 = slope * u1
    if jet.order == 1:
        return Jet2(value, d1)
    d2 = curvature * u1 * u1 + slope * np.asarray(jet.d2)
    return Jet2(value, d1, d2)


def featuregrid(jet: Jet2, tables, resolutions) -> Jet2:
    """Linear interpolation in one dense table per level.

    ``tables[l]`` has ``resolutions[l] + 1`` rows. Coordinates outside the
    domain are clamped to the boundary knot and get zero derivative.
    """
    u = np.asarray(jet.value)[:, 0]
    t_raw = (u + 1.0) * 0.5
    t = np.clip(t_raw, 0.0, 1.0)
    inside = (t_raw >= 0.0) & (t_raw <= 1.0)

    values, slopes = [], []
    for table, res in zip(tables, resolutions):
        pos = t * res
        i0 = np.minimum(np.floor(pos).astype(np.int64), res - 1)
        w = (pos - i0).astype(u.dtype)[:, np.newaxis]
        g0 = ops.take(table, i0, axis=0)
        g1 = ops.take(table, i0 + 1, axis=0)
        delta = ops.sub(g1, g0)
        values.append(ops.add(g0, ops.mul(delta, w)))
        if jet.order >= 1:
            # d/du of t*res is res/2
            scale = (0.5 * res * inside).astype(u.dtype)[:, np.newaxis]
            slopes.append(ops.mul(delta, scale * np.asarray(jet.d1)))

    value = ops.concat(values, axis=1)
    if jet.order == 0:
        return Jet2(value)
    d1 = ops.concat(slopes, axis=1)
    if jet.order == 1:
        return Jet2(value, d1)
    return Jet2(value, d1, np.zeros(value.shape, dtype=u.dtype))


def encode(jet: Jet2, encoding, tables=()) -> Jet2:
    """Encode a coordinate jet of shape ``(P, 1)``."""
    if not np.all(np.isfinite(np.asarray(jet.value))):
        raise InputError("non-finite coordinate passed to the encoder")
    if encoding.kind == "fourier":
        return fourier(jet, encoding.levels)
    if encoding.kind == "featuregrid":
        resolutions = [
            level_resolution(level, encoding.base_resolution, encoding.growth)
            for level in range(encoding.levels)
        ]
        return featuregrid(jet, tables, resolutions)
    return jet

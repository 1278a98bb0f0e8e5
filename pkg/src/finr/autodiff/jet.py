# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Second-order forward jets.

A Jet2 carries a value together with its first and second derivatives with
respect to one scalar input coordinate. The channels are ordinary tape
values, so losses built from d1/d2 are differentiated w.r.t. parameters by
the same single reverse pass as plain values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from finr.autodiff import tape as ops
from finr.errors import ShapeError


@dataclass(frozen=True)
class Jet2:
    """(value, d/dx, d2/dx2) triple; d1/d2 are None below the requested order."""

    value: Any
    d1: Optional[Any] = None
    d2: Optional[Any] = None

    def __post_init__(self):
        for channel in (self.d1, self.d2):
            if channel is not None and tuple(channel.shape) != tuple(self.value.shape):
                raise ShapeError(
                    f"jet channel shape {tuple(channel.shape)} != value shape {tuple(self.value.shape)}"
                )

    @property
    def order(self) -> int:
        if self.d1 is None:
            return 0
        return 1 if self.d2 is None else 2

    @classmethod
    def lift(cls, x, order: int, slope: float = 1.0, offset: float = 0.0) -> "Jet2":
        """Lift the coordinate ``slope * x + offset`` to a jet of ``order``."""
        x = np.asarray(x)
        value = slope * x + offset
        d1 = np.full_like(value, slope) if order >= 1 else None
        d2 = np.zeros_like(value) if order >= 2 else None
        return cls(value, d1, d2)

    def map(self, fn) -> "Jet2":
        """Apply a linear map to every channel."""
        return Jet2(
            fn(self.value),
            None if self.d1 is None else fn(self.d1),
            None if self.d2 is None else fn(self.d2),
        )

    def numpy(self) -> "Jet2":
        return self.map(lambda c: c.value if isinstance(c, ops.Node) else np.asarray(c))


def linear(jet: Jet2, weight, bias) -> Jet2:
    """Affine layer: the bias only enters the value channel."""
    value = ops.add(ops.matmul(jet.value, weight), bias)
    d1 = None if jet.d1 is None else ops.matmul(jet.d1, weight)
    d2 = None if jet.d2 is None else ops.matmul(jet.d2, weight)
    return Jet2(value, d1, d2)


def activate(jet: Jet2, activation) -> Jet2:
    """Push a jet through sigma using the second-order chain rule.

    value' = s(v); d1' = s'(v) d1; d2' = s''(v) d1^2 + s'(v) d2
    """
    v = jet.value
    value = ops.elementwise(v, activation, 0)
    if jet.order == 0:
        return Jet2(value)
    slope = ops.elementwise(v, activation, 1)
    d1 = ops.mul(slope, jet.d1)
    if jet.order == 1:
        return Jet2(value, d1)
    curvature = ops.elementwise(v, activation, 2)
    d2 = ops.add(ops.mul(curvature, ops.mul(jet.d1, jet.d1)), ops.mul(slope, jet.d2))
    return Jet2(value, d1, d2)

# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Activation kinds with analytic derivatives up to third order.

Each kind registers (s, s', s'', s'''). Forward jets of order k use
derivatives up to k; the reverse pass needs one order more.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from finr.errors import CapabilityError

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ActivationKind:
    """Named activation with its derivative ladder."""

    name: str
    derivatives: tuple[Fn, ...]
    sine_family: bool = False

    @property
    def max_order(self) -> int:
        return len(self.derivatives) - 1

    def __call__(self, z):
        return self.derivatives[0](z)

    def verify(self, points: np.ndarray, h: float = 1e-5, rtol: float = 1e-6) -> float:
        """Worst relative error of s', s'', s''' against central differences of the order below."""
        worst = 0.0
        for order in range(1, len(self.derivatives)):
            lower = self.derivatives[order - 1]
            numeric = (lower(points + h) - lower(points - h)) / (2.0 * h)
            exact = self.derivatives[order](points)
            scale = np.maximum(np.maximum(np.abs(exact), np.abs(numeric)), 1.0)
            worst = max(worst, float(np.max(np.abs(exact - numeric) / scale)))
        if worst > rtol:
            raise CapabilityError(
                f"activation {self.name!r} derivatives disagree with finite differences ({worst:.2e})"
            )
        return worst


def relu() -> ActivationKind:
    zero = lambda z: np.zeros_like(z)
    return ActivationKind(
        "relu",
        (
            lambda z: np.maximum(z, 0.0),
            lambda z: (z > 0).astype(z.dtype),
            zero,
            zero,
        ),
    )


def tanh() -> ActivationKind:
    def d1(z):
        t = np.tanh(z)
        return 1.0 - t * t

    def d2(z):
        t = np.tanh(z)
        return -2.0 * t * (1.0 - t * t)

    def d3(z):
        t = np.tanh(z)
        return (1.0 - t * t) * (6.0 * t * t - 2.0)

    return ActivationKind("tanh", (np.tanh, d1, d2, d3))


def sine(omega0: float) -> ActivationKind:
    w = float(omega0)
    return ActivationKind(
        "sine",
        (
            lambda z: np.sin(w * z),
            lambda z: w * np.cos(w * z),
            lambda z: -(w**2) * np.sin(w * z),
            lambda z: -(w**3) * np.cos(w * z),
        ),
        sine_family=True,
    )


def _gaussian_ladder(a: float):
    # Derivatives of g(z) = exp(-a z^2).
    g0 = lambda z: np.exp(-a * z * z)
    g1 = lambda z: -2.0 * a * z * g0(z)
    g2 = lambda z: (4.0 * a * a * z * z - 2.0 * a) * g0(z)
    g3 = lambda z: (12.0 * a * a * z - 8.0 * a**3 * z**3) * g0(z)
    return g0, g1, g2, g3


def gauss(scale: float) -> ActivationKind:
    return ActivationKind("gauss", _gaussian_ladder(float(scale) ** 2))


def gabor(omega0: float, scale: float) -> ActivationKind:
    """Real Gabor wavelet exp(-(s z)^2) sin(w z)."""
    w = float(omega0)
    g0, g1, g2, g3 = _gaussian_ladder(float(scale) ** 2)
    h0 = lambda z: np.sin(w * z)
    h1 = lambda z: w * np.cos(w * z)
    h2 = lambda z: -(w**2) * np.sin(w * z)
    h3 = lambda z: -(w**3) * np.cos(w * z)
    return ActivationKind(
        "gabor",
        (
            lambda z: g0(z) * h0(z),
            lambda z: g1(z) * h0(z) + g0(z) * h1(z),
            lambda z: g2(z) * h0(z) + 2.0 * g1(z) * h1(z) + g0(z) * h2(z),
            lambda z: g3(z) * h0(z)
            + 3.0 * g2(z) * h1(z)
            + 3.0 * g1(z) * h2(z)
            + g0(z) * h3(z),
        ),
        sine_family=True,
    )


def finer(omega0: float) -> ActivationKind:
    """sin(w (|z| + 1) z); the inner map has a kink in its second derivative at 0."""
    w = float(omega0)
    u = lambda z: w * (np.abs(z) + 1.0) * z
    u1 = lambda z: w * (2.0 * np.abs(z) + 1.0)
    u2 = lambda z: 2.0 * w * np.sign(z)
    return ActivationKind(
        "finer",
        (
            lambda z: np.sin(u(z)),
            lambda z: np.cos(u(z)) * u1(z),
            lambda z: -np.sin(u(z)) * u1(z) ** 2 + np.cos(u(z)) * u2(z),
            lambda z: -np.cos(u(z)) * u1(z) ** 3 - 3.0 * np.sin(u(z)) * u1(z) * u2(z),
        ),
        sine_family=True,
    )


@lru_cache(maxsize=None)
def resolve_activation(kind: str, omega0: float = 30.0, scale: float = 10.0) -> ActivationKind:
    """Build an activation and self-test its derivatives once per configuration."""
    builders = {
        "relu": lambda: relu(),
        "tanh": lambda: tanh(),
        "sine": lambda: sine(omega0),
        "gauss": lambda: gauss(scale),
        "gabor": lambda: gabor(omega0, scale),
        "finer": lambda: finer(omega0),
    }
    if kind not in builders:
        raise CapabilityError(f"unknown activation {kind!r}")
    activation = builders[kind]()
    samples = np.random.default_rng(0).uniform(0.05, 0.5, size=20)
    samples *= np.where(np.arange(20) % 2 == 0, 1.0, -1.0)
    activation.verify(samples / max(1.0, float(omega0) if activation.sine_family else 1.0))
    return activation

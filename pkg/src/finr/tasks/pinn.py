# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Navier-Stokes vorticity PINN on the Taylor-Green vortex.

The model maps (t, x, y) to (u_x, u_y, omega). Training combines an MSE fit
to coarse observations with the mean squared residuals of the vorticity
transport equation, incompressibility, and the vorticity definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from finr.autodiff import tape as ops
from finr.errors import CapabilityError, InputError, ShapeError
from finr.model import FieldEvaluation, eval_grid, eval_points
from finr.trainer.rng import DATA, generator

T_DOMAIN = (0.0, 1.0)
XY_DOMAIN = (0.0, 2.0 * np.pi)
DOMAINS = (T_DOMAIN, XY_DOMAIN, XY_DOMAIN)

# Channel and axis positions
U, V, OMEGA = 0, 1, 2
T, X, Y = 0, 1, 2


def taylor_green_reference(t, x, y, nu: float = 0.01):
    """Decaying Taylor-Green vortex: returns (u_x, u_y, omega)."""
    t, x, y = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (t, x, y)))
    decay = np.exp(-2.0 * nu * t)
    u = np.cos(x) * np.sin(y) * decay
    v = -np.sin(x) * np.cos(y) * decay
    omega = -2.0 * np.cos(x) * np.cos(y) * decay
    return u, v, omega


def taylor_green_field(points, nu: float = 0.01) -> FieldEvaluation:
    """Closed-form values and (t, x, y) partials of the vortex at ``P x 3`` points."""
    points = np.asarray(points, dtype=np.float64)
    t, x, y = points[:, 0], points[:, 1], points[:, 2]
    e = np.exp(-2.0 * nu * t)
    cx, sx, cy, sy = np.cos(x), np.sin(x), np.cos(y), np.sin(y)

    value = np.stack([cx * sy * e, -sx * cy * e, -2.0 * cx * cy * e], axis=1)
    d_t = -2.0 * nu * value
    d_x = np.stack([-sx * sy * e, -cx * cy * e, 2.0 * sx * cy * e], axis=1)
    d_y = np.stack([cx * cy * e, sx * sy * e, 2.0 * cx * sy * e], axis=1)
    dd_t = 4.0 * nu * nu * value
    dd_x = -value
    dd_y = -value
    return FieldEvaluation(value, [d_t, d_x, d_y], [dd_t, dd_x, dd_y])


def _channel(x, c: int):
    return ops.index(x, (..., c))


def ns_residual(field: FieldEvaluation, nu: float = 0.01):
    """Momentum, divergence and vorticity-definition residuals."""
    if len(field.grads) != 3 or len(field.second) != 3:
        raise CapabilityError("residuals need first and second derivatives on every axis")
    value, grads = field.value, field.grads
    u, v, omega = (_channel(value, c) for c in (U, V, OMEGA))
    omega_t = _channel(grads[T], OMEGA)
    omega_x = _channel(grads[X], OMEGA)
    omega_y = _channel(grads[Y], OMEGA)
    lap = _channel(field.laplacian((X, Y)), OMEGA)

    advection = ops.add(ops.mul(u, omega_x), ops.mul(v, omega_y))
    momentum = ops.sub(ops.add(omega_t, advection), ops.mul(lap, nu))
    divergence = ops.add(_channel(grads[X], U), _channel(grads[Y], V))
    curl = ops.sub(_channel(grads[X], V), _channel(grads[Y], U))
    definition = ops.sub(omega, curl)
    return momentum, divergence, definition


def sample_collocation(domains: Sequence[tuple[float, float]], count: int, seed) -> np.ndarray:
    """``count x d`` uniform points; ``seed`` is an int or a numpy Generator."""
    if count < 1:
        raise InputError("collocation count must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else generator(int(seed), DATA)
    lo = np.array([d[0] for d in domains])
    hi = np.array([d[1] for d in domains])
    return lo + (hi - lo) * rng.random((count, len(domains)))


def observation_coords(shape: Sequence[int]) -> list[np.ndarray]:
    return [np.linspace(lo, hi, n) for (lo, hi), n in zip(DOMAINS, shape)]


def observe(coords: Sequence[np.ndarray], nu: float) -> np.ndarray:
    t, x, y = np.meshgrid(*coords, indexing="ij")
    return np.stack(taylor_green_reference(t, x, y, nu), axis=-1)


def field_errors(pred, truth) -> dict:
    """Vorticity MSE (the headline metric) and velocity MSE."""
    err = (np.asarray(pred, dtype=np.float64) - truth) ** 2
    return {
        "mse": float(err[..., OMEGA].mean()),
        "mse_velocity": float(err[..., :OMEGA].mean()),
    }


@dataclass(frozen=True)
class PinnWeights:
    data: float = 1.0
    pde: float = 1.0


def pinn_loss(field: FieldEvaluation, observed_pred, observations, nu: float, weights=PinnWeights()):
    """Weighted data MSE plus mean squared PDE residuals; returns ``(total, components)``."""
    observations = np.asarray(observations)
    if tuple(observed_pred.shape) != observations.shape:
        raise ShapeError(
            f"observation prediction {tuple(observed_pred.shape)} != observations {observations.shape}"
        )
    data = ops.mean(ops.square(ops.sub(observed_pred, observations)))
    pde = None
    for residual in ns_residual(field, nu):
        term = ops.mean(ops.square(residual))
        pde = term if pde is None else ops.add(pde, term)
    total = ops.add(ops.mul(data, weights.data), ops.mul(pde, weights.pde))
    return total, {"data": data, "pde": pde}


@dataclass
class PinnTask:
    nu: float = 0.01
    observation_shape: tuple[int, int, int] = (6, 32, 32)
    collocation: int = 20000
    collocation_batch: int = 1024
    collocation_layout: Literal["points", "grid"] = "points"
    grid_shape: tuple[int, int, int] = (8, 16, 16)
    weights: PinnWeights = field(default_factory=PinnWeights)
    eval_shape: tuple[int, int, int] = (51, 64, 64)
    seed: int = 0

    name = "pinn"
    jet_order = 2

    def __post_init__(self):
        if self.nu <= 0.0:
            raise InputError("viscosity must be positive")
        self.obs_coords = observation_coords(self.observation_shape)
        self.observations = observe(self.obs_coords, self.nu)
        self.pool = sample_collocation(DOMAINS, self.collocation, self.seed)

    @property
    def domains(self) -> list[tuple[float, float]]:
        return list(DOMAINS)

    def check(self, model) -> None:
        for net in model.spec.networks:
            if net.encoding.kind == "featuregrid":
                raise CapabilityError(
                    "featuregrid encodings are piecewise linear and cannot drive PDE residuals"
                )
        model.check_capability(self.jet_order)
        if model.spec.d != 3 or model.spec.channels != 3:
            raise ShapeError("the PINN task needs a (t, x, y) -> (u_x, u_y, omega) model")

    def collocation_field(self, model, tape, rng) -> FieldEvaluation:
        if self.collocation_layout == "grid":
            coords = [
                np.sort(lo + (hi - lo) * rng.random(n))
                for (lo, hi), n in zip(DOMAINS, self.grid_shape)
            ]
            return eval_grid(model, coords, 2, tape=tape)
        batch = min(self.collocation_batch, self.collocation)
        rows = rng.choice(self.collocation, size=batch, replace=False)
        return eval_points(model, self.pool[np.sort(rows)], 2, tape=tape)

    def training_loss(self, model, tape, rng):
        field = self.collocation_field(model, tape, rng)
        observed = eval_grid(model, self.obs_coords, tape=tape).value
        return pinn_loss(field, observed, self.observations, self.nu, self.weights)

    def eval_coords(self, shape: Optional[Sequence[int]] = None) -> list[np.ndarray]:
        return observation_coords(self.eval_shape if shape is None else shape)

    def evaluate(self, model, shape: Optional[Sequence[int]] = None) -> dict:
        coords = self.eval_coords(shape)
        pred = np.asarray(eval_grid(model, coords).value)
        return field_errors(pred, observe(coords, self.nu))

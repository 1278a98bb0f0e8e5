# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Signed distance fitting with Eikonal regularization.

Ground truth is an analytic shape sampled on an N^3 grid over [-1, 1]^3 and
truncated to [-tau, tau]. The loss combines a unit-gradient term over all
samples, an L1 data term over all samples, and an L1 surface term over the
thin band where the truncated distance is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from finr.autodiff import tape as ops
from finr.errors import CapabilityError, InputError, ShapeError
from finr.model import FieldEvaluation, eval_grid, eval_indexed
from finr.tasks.metrics import iou, mse

ShapeName = Literal["sphere", "torus", "union"]

DOMAIN = (-1.0, 1.0)
TAU = 0.1


def sphere(points: np.ndarray, radius: float = 0.5) -> np.ndarray:
    return np.linalg.norm(points, axis=-1) - radius


def torus(points: np.ndarray, major: float = 0.5, minor: float = 0.2) -> np.ndarray:
    ring = np.hypot(points[..., 0], points[..., 1]) - major
    return np.hypot(ring, points[..., 2]) - minor


def union(points: np.ndarray, offset: float = 0.35, radius: float = 0.3) -> np.ndarray:
    shift = np.array([offset, 0.0, 0.0])
    return np.minimum(sphere(points - shift, radius), sphere(points + shift, radius))


SHAPES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": sphere,
    "torus": torus,
    "union": union,
}


def analytic_sdf(shape: str, points: np.ndarray) -> np.ndarray:
    if shape not in SHAPES:
        raise InputError(f"unknown shape {shape!r}; choose from {sorted(SHAPES)}")
    return SHAPES[shape](points)


def truncate_sdf(grid, tau: float = TAU) -> np.ndarray:
    grid = np.asarray(grid)
    if not np.all(np.isfinite(grid)):
        raise InputError("SDF grid contains non-finite values")
    return np.clip(grid, -tau, tau)


@dataclass(frozen=True)
class SdfWeights:
    eikonal: float = 0.1
    data: float = 1.0
    surface: float = 3.0


def _masked_mean(x, mask: np.ndarray):
    count = int(np.count_nonzero(mask))
    if count == 0:
        return 0.0
    return ops.mul(ops.reduce_sum(ops.mul(x, mask.astype(np.float64))), 1.0 / count)


def sdf_loss(value, grads, target, band, weights: SdfWeights = SdfWeights()):
    """Weighted Eikonal + data + surface loss.

    ``value`` and every entry of ``grads`` share the target's shape; ``band``
    is a boolean mask of the same shape. Returns ``(total, components)``.
    """
    if not grads:
        raise CapabilityError("the Eikonal term needs first derivatives")
    target = np.asarray(target)
    if tuple(value.shape) != target.shape:
        raise ShapeError(f"prediction shape {tuple(value.shape)} != target shape {target.shape}")

    sq = None
    for g in grads:
        term = ops.square(g)
        sq = term if sq is None else ops.add(sq, term)
    eikonal = ops.mean(ops.absolute(ops.sub(ops.sqrt(sq), 1.0)))
    residual = ops.absolute(ops.sub(value, target))
    data = ops.mean(residual)
    surface = _masked_mean(residual, np.asarray(band))

    total = ops.add(
        ops.add(ops.mul(eikonal, weights.eikonal), ops.mul(data, weights.data)),
        ops.mul(surface, weights.surface),
    )
    return total, {"eikonal": eikonal, "data": data, "surface": surface}


def grid_points(resolution: int) -> tuple[list[np.ndarray], np.ndarray]:
    axis = np.linspace(DOMAIN[0], DOMAIN[1], resolution)
    mesh = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    return [axis, axis, axis], mesh


@dataclass
class SdfTask:
    shape: str = "sphere"
    resolution: int = 48
    tau: float = TAU
    weights: SdfWeights = field(default_factory=SdfWeights)
    batch_size: int = 2**18
    metric_shape: Optional[str] = None

    name = "sdf"
    jet_order = 1

    def __post_init__(self):
        if self.resolution < 2:
            raise InputError("SDF grid resolution must be at least 2")
        self.coords, self.points = grid_points(self.resolution)
        self.target = truncate_sdf(analytic_sdf(self.shape, self.points), self.tau)[..., None]
        diagonal = (DOMAIN[1] - DOMAIN[0]) * math.sqrt(3.0)
        self.band = np.abs(self.target) < 0.01 * diagonal
        reference = self.metric_shape or self.shape
        self.reference = analytic_sdf(reference, self.points)[..., None]

    @property
    def domains(self) -> list[tuple[float, float]]:
        return [DOMAIN] * 3

    @property
    def full_grid(self) -> bool:
        return self.resolution**3 <= self.batch_size

    def check(self, model) -> None:
        model.check_capability(self.jet_order)
        for net in model.spec.networks:
            if net.encoding.kind == "featuregrid":
                raise CapabilityError("featuregrid encodings are not supported for SDF fitting")
        if model.spec.d != 3 or model.spec.channels != 1:
            raise ShapeError("SDF fitting needs a d=3 model with one channel")

    def training_loss(self, model, tape, rng):
        if self.full_grid:
            out = eval_grid(model, self.coords, 1, tape=tape)
            return sdf_loss(out.value, out.grads, self.target, self.band, self.weights)
        n = self.resolution
        indices = rng.integers(0, n, size=(self.batch_size, 3))
        out = eval_indexed(model, self.coords, indices, 1, tape=tape)
        picked = tuple(indices.T)
        return sdf_loss(
            out.value, out.grads, self.target[picked], self.band[picked], self.weights
        )

    def predict(self, model) -> FieldEvaluation:
        return eval_grid(model, self.coords, 1)

    def oracle_field(self, h: float = 1e-5) -> FieldEvaluation:
        """Analytic SDF with central-difference gradients, shaped like a model evaluation."""
        value = analytic_sdf(self.shape, self.points)[..., None]
        grads = []
        for k in range(3):
            step = np.zeros(3)
            step[k] = h
            upper = analytic_sdf(self.shape, self.points + step)
            lower = analytic_sdf(self.shape, self.points - step)
            grads.append(((upper - lower) / (2.0 * h))[..., None])
        return FieldEvaluation(value, grads)

    def evaluate(self, model=None, field: Optional[FieldEvaluation] = None) -> dict:
        field = self.predict(model) if field is None else field
        value = np.asarray(field.value)
        norm = np.sqrt(sum(np.asarray(g) ** 2 for g in field.grads))
        return {
            "iou": iou(value, self.reference),
            "mse": mse(truncate_sdf(value, self.tau), self.target),
            "eikonal": float(np.mean(np.abs(norm - 1.0))),
        }

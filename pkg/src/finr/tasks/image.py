# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Image fitting.

Pixels sit on integer coordinates: axis 0 (rows) spans [0, H-1] and axis 1
(columns) spans [0, W-1]. When the whole image fits in one batch the model
is evaluated on the full grid every step; otherwise a random pixel batch is
composed point-wise from full-axis factor rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from matplotlib import image as mpimg

from finr.autodiff import tape as ops
from finr.errors import InputError, ShapeError
from finr.model import eval_grid, eval_indexed
from finr.tasks.metrics import psnr, ssim, mse, SSIM_WINDOW
from finr.trainer.rng import generator

DEFAULT_BATCH = 2**18


def synthetic_image(
    height: int, width: int, channels: int = 3, seed: int = 0, components: int = 8
) -> np.ndarray:
    """Band-limited test image: a few shared plane waves with per-channel amplitudes.

    Odd components are axis-aligned so the image keeps a low separable rank.
    Values are rescaled into [0, 1].
    """
    if not 1 <= components <= 8:
        raise InputError("synthetic images use between 1 and 8 components")
    rng = generator(seed)
    y = np.arange(height, dtype=np.float64)[:, None] / height
    x = np.arange(width, dtype=np.float64)[None, :] / width
    waves = []
    for k in range(components):
        fy, fx = rng.integers(1, 5, size=2)
        if k % 2 == 1:
            fy, fx = (fy, 0) if k % 4 == 1 else (0, fx)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        waves.append(np.sin(2.0 * np.pi * (fy * y + fx * x) + phase))
    waves = np.stack(waves, axis=-1)
    amplitudes = rng.uniform(-1.0, 1.0, size=(components, channels))
    image = waves @ amplitudes
    lo = image.min(axis=(0, 1), keepdims=True)
    hi = image.max(axis=(0, 1), keepdims=True)
    return (image - lo) / np.maximum(hi - lo, 1e-12)


def load_image(path: Path) -> np.ndarray:
    """Read a PNG into an H x W x C float array in [0, 1] (alpha dropped)."""
    try:
        data = np.asarray(mpimg.imread(str(path)), dtype=np.float64)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read image {path}: {e}") from e
    if data.ndim == 2:
        data = data[..., None]
    if data.shape[-1] == 4:
        data = data[..., :3]
    if data.max() > 1.0:
        data = data / 255.0
    return data


def image_loss(pred, target):
    """Mean squared error; ``pred`` may be a tape node."""
    target = np.asarray(target)
    if tuple(pred.shape) != target.shape:
        raise ShapeError(f"prediction shape {tuple(pred.shape)} != target shape {target.shape}")
    return ops.mean(ops.square(ops.sub(pred, target)))


@dataclass
class ImageTask:
    target: np.ndarray
    batch_size: int = DEFAULT_BATCH

    name = "image"
    jet_order = 0

    def __post_init__(self):
        target = np.asarray(self.target, dtype=np.float64)
        if target.ndim != 3 or target.shape[-1] not in (1, 3):
            raise ShapeError(f"image target must be H x W x C with C in (1, 3), got {target.shape}")
        if not np.all(np.isfinite(target)) or target.min() < 0.0 or target.max() > 1.0:
            raise InputError("image target must be finite and within [0, 1]")
        self.target = target
        if self.batch_size < 1:
            raise InputError("batch size must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.target.shape[0], self.target.shape[1]

    @property
    def channels(self) -> int:
        return self.target.shape[-1]

    @property
    def domains(self) -> list[tuple[float, float]]:
        h, w = self.shape
        return [(0.0, float(h - 1)), (0.0, float(w - 1))]

    def axis_coords(self) -> list[np.ndarray]:
        h, w = self.shape
        return [np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64)]

    @property
    def full_grid(self) -> bool:
        h, w = self.shape
        return h * w <= self.batch_size

    def check(self, model) -> None:
        model.check_capability(self.jet_order)
        if model.spec.d != 2 or model.spec.channels != self.channels:
            raise ShapeError(
                f"image task needs a d=2 model with {self.channels} channels, "
                f"got d={model.spec.d}, channels={model.spec.channels}"
            )

    def training_loss(self, model, tape, rng):
        coords = self.axis_coords()
        if self.full_grid:
            pred = eval_grid(model, coords, tape=tape).value
            return image_loss(pred, self.target), {}
        h, w = self.shape
        flat = rng.integers(0, h * w, size=self.batch_size)
        indices = np.stack([flat // w, flat % w], axis=1)
        pred = eval_indexed(model, coords, indices, tape=tape).value
        return image_loss(pred, self.target[indices[:, 0], indices[:, 1]]), {}

    def render(self, model) -> np.ndarray:
        return np.asarray(eval_grid(model, self.axis_coords()).value)

    def evaluate(self, model, prediction: Optional[np.ndarray] = None) -> dict:
        pred = self.render(model) if prediction is None else prediction
        metrics = {"psnr": psnr(pred, self.target), "mse": mse(pred, self.target)}
        if min(self.shape) >= SSIM_WINDOW:
            metrics["ssim"] = ssim(pred, self.target)
        return metrics

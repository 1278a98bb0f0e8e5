# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Fidelity metrics: PSNR, SSIM, IoU, MSE, and the per-report record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from finr.errors import ShapeError

# Columns of metrics.csv, in order.
METRIC_COLUMNS = (
    "step",
    "loss",
    "loss_eikonal",
    "loss_data",
    "loss_surface",
    "loss_pde",
    "psnr",
    "ssim",
    "iou",
    "mse",
)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(pred, target) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return pred, target


def mse(pred, target) -> float:
    pred, target = _pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def psnr(pred, target, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    err = mse(pred, target)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def _filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    patches = sliding_window_view(image, window.shape)
    return np.einsum("ijkl,kl->ij", patches, window)


def ssim_map(pred, target, data_range: float = 1.0) -> np.ndarray:
    """Local SSIM of two 2-D images over every full 11x11 window."""
    pred, target = _pair(pred, target)
    if pred.ndim != 2:
        raise ShapeError(f"ssim_map expects a 2-D image, got shape {pred.shape}")
    if min(pred.shape) < SSIM_WINDOW:
        raise ShapeError(f"image {pred.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    window = gaussian_window()

    mu1 = _filter(pred, window)
    mu2 = _filter(target, window)
    var1 = _filter(pred * pred, window) - mu1 * mu1
    var2 = _filter(target * target, window) - mu2 * mu2
    cov = _filter(pred * target, window) - mu1 * mu2

    numerator = (2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2)
    denominator = (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2)
    return numerator / denominator


def ssim(pred, target, data_range: float = 1.0) -> float:
    """Mean local SSIM; H x W x C images are averaged over channels."""
    pred, target = _pair(pred, target)
    if pred.ndim == 3:
        return float(
            np.mean([ssim_map(pred[..., c], target[..., c], data_range).mean() for c in range(pred.shape[-1])])
        )
    return float(ssim_map(pred, target, data_range).mean())


def iou(pred, target, level: float = 0.0) -> float:
    """Intersection over union of the occupancies ``value < level``."""
    pred, target = _pair(pred, target)
    a = pred < level
    b = target < level
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


@dataclass
class MetricReport:
    """One logged point of a training run."""

    step: int
    loss: float
    components: dict[str, float] = field(default_factory=dict)
    psnr: Optional[float] = None
    ssim: Optional[float] = None
    iou: Optional[float] = None
    mse: Optional[float] = None
    seconds: float = 0.0

    def row(self) -> dict[str, str]:
        """CSV row; absent metrics are empty cells and values use repr precision."""
        values = {
            "step": self.step,
            "loss": self.loss,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "iou": self.iou,
            "mse": self.mse,
        }
        for name, value in self.components.items():
            values[f"loss_{name}"] = value
        return {col: _cell(values.get(col)) for col in METRIC_COLUMNS}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf"
    return repr(value)

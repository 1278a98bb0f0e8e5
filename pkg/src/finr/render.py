# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Result rendering.

Pixel-exact outputs (reconstructions, error maps, slices) are quantized here
and written with ``matplotlib.image.imsave``; every PNG gets an FTNR dump of
the float data next to it. Comparison panels use pyplot figures.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import image as mpimg  # noqa: E402

from finr.core.dense import DenseTensor  # noqa: E402

ERROR_GAIN = 8.0


def quantize(values) -> np.ndarray:
    """Map [0, 1] floats to uint8 by rounding; values outside are clipped."""
    return np.round(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def _as_rgb(pixels: np.ndarray) -> np.ndarray:
    if pixels.ndim == 3 and pixels.shape[-1] == 1:
        pixels = pixels[..., 0]
    if pixels.ndim == 2:
        pixels = np.repeat(pixels[..., None], 3, axis=-1)
    return pixels


def save_png(path: Path, values, *, dump=None) -> list[str]:
    """Write ``values`` in [0, 1] as an 8-bit RGB PNG plus an FTNR dump.

    ``dump`` is the float tensor stored alongside (defaults to ``values``).
    Returns the written file names.
    """
    path = Path(path)
    mpimg.imsave(path, _as_rgb(quantize(values)))
    raw = np.asarray(values if dump is None else dump, dtype=np.float64)
    ftnr = path.with_suffix(".ftnr")
    DenseTensor(raw).save(ftnr)
    return [path.name, ftnr.name]


def error_map(pred, truth) -> np.ndarray:
    """Absolute error magnified 8x and clipped to [0, 1]."""
    return np.clip(ERROR_GAIN * np.abs(np.asarray(pred) - np.asarray(truth)), 0.0, 1.0)


def sdf_slice(values, tau: float) -> np.ndarray:
    """Signed distances in [-tau, tau] mapped onto [0, 1] (surface at mid-gray)."""
    return np.clip((np.asarray(values) + tau) / (2.0 * tau), 0.0, 1.0)


def occupancy_difference(pred, truth, level: float = 0.0) -> np.ndarray:
    """RGB slice: white where both are inside, red for predicted-only, blue for missed."""
    a = np.asarray(pred) < level
    b = np.asarray(truth) < level
    rgb = np.zeros(a.shape + (3,))
    rgb[a & b] = (1.0, 1.0, 1.0)
    rgb[a & ~b] = (1.0, 0.0, 0.0)
    rgb[~a & b] = (0.0, 0.0, 1.0)
    return rgb


def three_panel(path: Path, truth, pred, title: str, extent: Sequence[float]) -> str:
    """Truth / prediction / pointwise-error panel for one 2-D slice."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    error = np.abs(pred - truth)
    vmin, vmax = float(truth.min()), float(truth.max())

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), constrained_layout=True)
    panels = (("truth", truth, vmin, vmax), ("prediction", pred, vmin, vmax), ("|error|", error, 0.0, None))
    for ax, (label, data, lo, hi) in zip(axes, panels):
        im = ax.imshow(data.T, origin="lower", extent=extent, vmin=lo, vmax=hi, cmap="RdBu_r" if label != "|error|" else "magma")
        ax.set_title(label)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(title)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path).name

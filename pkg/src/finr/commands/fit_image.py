# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""`finr fit-image`: fit a factorized model to an image."""

from pathlib import Path
from typing import Optional

import numpy as np

from finr.commands.training import (
    CONFIG_OPTION,
    F64_OPTION,
    OUT_OPTION,
    SEED_OPTION,
    THREADS_OPTION,
    fit,
    summary_lines,
)
from finr.config import ConfigLoader, FitImageFile
from finr.helpers import exit_on_error, limit_threads, write_manifest
from finr.render import error_map, save_png
from finr.tasks.image import ImageTask, load_image, synthetic_image
from finr.ui import render_card, render_status

DEFAULT_MODE = "CP"
DEFAULT_RANK = 256


def build_task(cfg: FitImageFile) -> ImageTask:
    image = cfg.image
    if image.path:
        target = load_image(Path(image.path))
    else:
        target = synthetic_image(
            image.height, image.width, image.channels, seed=image.target_seed, components=image.components
        )
    return ImageTask(target, batch_size=image.batch_size)


def run_fit_image(cfg: FitImageFile, out: Path) -> dict:
    task = build_task(cfg)
    spec = cfg.model.build(task.domains, task.channels, DEFAULT_MODE, DEFAULT_RANK)
    h, w = task.shape
    settings = {"kind": "image", "height": h, "width": w, "channels": task.channels}
    model, result, outputs = fit("fit-image", cfg.run, spec, task, out, settings)

    pred = task.render(model)
    outputs += save_png(Path(out) / "reconstruction.png", pred)
    outputs += save_png(Path(out) / "target.png", task.target)
    outputs += save_png(Path(out) / "error_map.png", error_map(pred, task.target))
    write_manifest(out, "fit-image", ConfigLoader.snapshot(cfg), cfg.run.seed, outputs + ["manifest.json"])

    metrics = dict(result.extras)
    metrics["seconds"] = result.final.seconds
    render_card("fit-image results", summary_lines(metrics, ["psnr", "ssim", "mse", "seconds"]))
    return metrics


def fit_image(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    f64: bool = F64_OPTION,
):
    """Fit an image (PNG or synthetic) and write reconstruction and error map."""
    with exit_on_error():
        cfg = ConfigLoader(config).load(FitImageFile, seed=seed, threads=threads, f64=f64)
        with limit_threads(cfg.run.threads):
            metrics = run_fit_image(cfg, out)
        if np.isinf(metrics.get("psnr", 0.0)):
            render_status("Exact reconstruction (PSNR is infinite)", level="info")
        render_status("Image fit complete", level="success")

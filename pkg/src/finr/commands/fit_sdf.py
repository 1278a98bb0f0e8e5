# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""`finr fit-sdf`: fit a signed distance field with Eikonal regularization."""

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
from finr.config import ConfigLoader, FitSdfFile
from finr.helpers import MetricsWriter, exit_on_error, limit_threads, prepare_output, write_manifest
from finr.render import occupancy_difference, save_png, sdf_slice
from finr.tasks.metrics import MetricReport
from finr.tasks.sdf import SdfTask, SdfWeights, sdf_loss
from finr.ui import render_card, render_status

DEFAULT_MODE = "TT"
DEFAULT_RANK = 128


def build_task(cfg: FitSdfFile) -> SdfTask:
    sdf = cfg.sdf
    return SdfTask(
        shape=sdf.shape,
        resolution=sdf.resolution,
        tau=sdf.tau,
        weights=SdfWeights(sdf.eikonal_weight, sdf.data_weight, sdf.surface_weight),
        batch_size=sdf.batch_size,
        metric_shape=sdf.metric_shape,
    )


def write_slices(task: SdfTask, value: np.ndarray, out: Path) -> list[str]:
    """Mid-plane (z) slices of predicted and true SDF plus their occupancy difference."""
    mid = task.resolution // 2
    pred = value[:, :, mid, 0]
    true = task.reference[:, :, mid, 0]
    outputs = save_png(out / "sdf_pred_slice.png", sdf_slice(pred, task.tau), dump=pred)
    outputs += save_png(out / "sdf_true_slice.png", sdf_slice(true, task.tau), dump=true)
    outputs += save_png(out / "occupancy_diff.png", occupancy_difference(pred, true))
    return outputs


def run_oracle(cfg: FitSdfFile, task: SdfTask, out: Path) -> dict:
    """Score the analytic SDF itself; checks metrics and rendering without training."""
    out = prepare_output(out)
    field = task.oracle_field()
    loss, components = sdf_loss(field.value, field.grads, task.target, task.band, task.weights)
    metrics = task.evaluate(field=field)
    entry = MetricReport(
        step=0,
        loss=float(loss),
        components={name: float(v) for name, v in components.items()},
        iou=metrics["iou"],
        mse=metrics["mse"],
    )
    with MetricsWriter(out) as writer:
        writer.write(entry)
    outputs = ["metrics.csv", "timing.csv"] + write_slices(task, np.asarray(field.value), out)
    write_manifest(out, "fit-sdf", ConfigLoader.snapshot(cfg), cfg.run.seed, outputs + ["manifest.json"])
    return metrics


def run_fit_sdf(cfg: FitSdfFile, out: Path) -> dict:
    task = build_task(cfg)
    if cfg.sdf.oracle:
        metrics = run_oracle(cfg, task, out)
        render_card("fit-sdf oracle", summary_lines(metrics, ["iou", "mse", "eikonal"]))
        return metrics

    spec = cfg.model.build(task.domains, 1, DEFAULT_MODE, DEFAULT_RANK)
    settings = {"kind": "sdf", "shape": task.shape, "resolution": task.resolution, "tau": task.tau}
    model, result, outputs = fit("fit-sdf", cfg.run, spec, task, out, settings)

    outputs += write_slices(task, np.asarray(task.predict(model).value), Path(out))
    write_manifest(out, "fit-sdf", ConfigLoader.snapshot(cfg), cfg.run.seed, outputs + ["manifest.json"])

    metrics = dict(result.extras)
    metrics["seconds"] = result.final.seconds
    render_card("fit-sdf results", summary_lines(metrics, ["iou", "mse", "eikonal", "seconds"]))
    return metrics


def fit_sdf(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    f64: bool = F64_OPTION,
):
    """Fit an analytic shape's truncated SDF and write slices and occupancy maps."""
    with exit_on_error():
        cfg = ConfigLoader(config).load(FitSdfFile, seed=seed, threads=threads, f64=f64)
        with limit_threads(cfg.run.threads):
            run_fit_sdf(cfg, out)
        render_status("SDF fit complete", level="success")

# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""`finr eval`: render a trained checkpoint on an arbitrary query grid."""

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from finr.commands.fit_pinn import write_panels
from finr.commands.training import CONFIG_OPTION, F64_OPTION, OUT_OPTION, SEED_OPTION, THREADS_OPTION
from finr.config import ConfigLoader, EvalFile
from finr.core.dense import DenseTensor
from finr.errors import CheckpointError, ConfigError
from finr.helpers import exit_on_error, limit_threads, prepare_output, write_manifest
from finr.model import AnyModel, clamp_coords, eval_grid
from finr.render import save_png, sdf_slice
from finr.tasks.metrics import iou, mse
from finr.tasks.pinn import field_errors, observe
from finr.tasks.sdf import TAU, analytic_sdf, truncate_sdf
from finr.trainer.checkpoint import load_checkpoint
from finr.ui import Spinner, render_card, render_status

TASK_KINDS = ("image", "sdf", "pinn")


def default_resolution(task: dict) -> list[int]:
    """Training-time grid of the checkpoint's task."""
    kind = task.get("kind")
    if kind == "image":
        return [int(task["height"]), int(task["width"])]
    if kind == "sdf":
        return [int(task["resolution"])] * 3
    return [int(n) for n in task["eval_grid"]]


def query_coords(model: AnyModel, task: dict, resolution, bounds) -> list[np.ndarray]:
    d = model.spec.d
    resolution = resolution or default_resolution(task)
    bounds = bounds or [list(dom) for dom in model.spec.domains]
    if len(resolution) != d or len(bounds) != d:
        raise ConfigError(f"the checkpoint model has d={d}; resolution and bounds need {d} entries")
    coords = []
    for n, pair in zip(resolution, bounds):
        if n < 1 or len(pair) != 2 or not pair[1] >= pair[0]:
            raise ConfigError(f"invalid query axis: {n} points over {pair}")
        coords.append(np.linspace(float(pair[0]), float(pair[1]), int(n)))
    return coords


def write_metrics(path: Path, metrics: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for name in sorted(metrics):
            writer.writerow([name, repr(metrics[name])])


def run_eval(cfg: EvalFile, out: Path) -> dict:
    """Render the checkpoint; returns task metrics against the analytic reference, if any."""
    out = prepare_output(out)
    ckpt = load_checkpoint(Path(cfg.eval.checkpoint))
    model = ckpt.restore_model()
    task = ckpt.task
    kind = task.get("kind")
    if kind not in TASK_KINDS:
        raise CheckpointError(f"checkpoint has unknown task kind {kind!r}")
    if cfg.run.f64:
        for p in model.params():
            p.value = p.value.astype(np.float64)
            p.zero_grad()

    coords = query_coords(model, task, cfg.eval.resolution, cfg.eval.bounds)
    coords, moved = clamp_coords(model, coords)
    if moved:
        render_status(f"{moved} query coordinates were outside the model domain and were clamped", level="warning")

    with Spinner(f"Evaluating {' x '.join(str(len(xs)) for xs in coords)} grid"):
        pred = np.asarray(eval_grid(model, coords).value, dtype=np.float64)

    outputs = ["render.ftnr"]
    DenseTensor(pred).save(out / "render.ftnr")
    metrics: dict = {}
    if kind == "image":
        outputs += save_png(out / "render.png", pred, dump=pred)
    elif kind == "sdf":
        mid = len(coords[2]) // 2
        tau = float(task.get("tau", TAU))
        outputs += save_png(out / "sdf_slice.png", sdf_slice(pred[:, :, mid, 0], tau), dump=pred[:, :, mid, 0])
        mesh = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)
        truth = analytic_sdf(task["shape"], mesh)[..., None]
        metrics = {"iou": iou(pred, truth), "mse": mse(truncate_sdf(pred, tau), truncate_sdf(truth, tau))}
    else:
        truth = observe(coords, float(task["nu"]))
        outputs += write_panels(pred, truth, coords, out)
        metrics = field_errors(pred, truth)

    if metrics:
        write_metrics(out / "eval.csv", metrics)
        outputs.append("eval.csv")
    write_manifest(out, "eval", ConfigLoader.snapshot(cfg), cfg.run.seed, outputs + ["manifest.json"])
    return metrics


def eval_checkpoint(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    f64: bool = F64_OPTION,
):
    """Render a checkpoint at any resolution (PNG + FTNR); PINN runs also report MSE."""
    with exit_on_error():
        cfg = ConfigLoader(config).load(EvalFile, seed=seed, threads=threads, f64=f64)
        with limit_threads(cfg.run.threads):
            metrics = run_eval(cfg, out)
        if metrics:
            render_card("eval results", "\n".join(f"{k}: {v:.6g}" for k, v in sorted(metrics.items())))
        render_status("Evaluation complete", level="success")

# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""`finr fit-pinn`: Taylor-Green vorticity super-resolution with a physics loss."""

from pathlib import Path
from typing import Optional, Sequence

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
from finr.config import ConfigLoader, FitPinnFile
from finr.core.dense import DenseTensor
from finr.helpers import exit_on_error, limit_threads, write_manifest
from finr.model import eval_grid
from finr.render import three_panel
from finr.tasks.pinn import OMEGA, PinnTask, PinnWeights, observe
from finr.ui import render_card, render_status

DEFAULT_MODE = "TT"
DEFAULT_RANK = 128
PANEL_TIMES = (0.0, 0.5, 1.0)


def build_task(cfg: FitPinnFile) -> PinnTask:
    pinn = cfg.pinn
    return PinnTask(
        nu=pinn.nu,
        observation_shape=tuple(pinn.observations),
        collocation=pinn.collocation,
        collocation_batch=pinn.collocation_batch,
        collocation_layout=pinn.collocation_layout,
        grid_shape=tuple(pinn.collocation_grid),
        weights=PinnWeights(pinn.data_weight, pinn.pde_weight),
        eval_shape=tuple(pinn.eval_grid),
        seed=cfg.run.seed,
    )


def write_panels(pred: np.ndarray, truth: np.ndarray, coords: Sequence[np.ndarray], out: Path) -> list[str]:
    """FTNR dumps plus truth / prediction / error panels of omega at the first, middle and last time."""
    outputs = []
    for name, data in (("prediction", pred), ("truth", truth)):
        DenseTensor(data).save(out / f"{name}.ftnr")
        outputs.append(f"{name}.ftnr")

    ts, xs, ys = coords
    extent = (float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1]))
    for i in sorted({int(np.argmin(np.abs(ts - t))) for t in PANEL_TIMES}):
        name = f"omega_t{ts[i]:.2f}.png"
        outputs.append(
            three_panel(out / name, truth[i, :, :, OMEGA], pred[i, :, :, OMEGA], f"vorticity at t = {ts[i]:.2f}", extent)
        )
    return outputs


def run_fit_pinn(cfg: FitPinnFile, out: Path) -> dict:
    task = build_task(cfg)
    spec = cfg.model.build(task.domains, 3, DEFAULT_MODE, DEFAULT_RANK)
    settings = {"kind": "pinn", "nu": task.nu, "eval_grid": list(task.eval_shape)}
    model, result, outputs = fit("fit-pinn", cfg.run, spec, task, out, settings)

    coords = task.eval_coords()
    pred = np.asarray(eval_grid(model, coords).value, dtype=np.float64)
    outputs += write_panels(pred, observe(coords, task.nu), coords, Path(out))
    write_manifest(out, "fit-pinn", ConfigLoader.snapshot(cfg), cfg.run.seed, outputs + ["manifest.json"])

    metrics = dict(result.extras)
    metrics["seconds"] = result.final.seconds
    render_card("fit-pinn results", summary_lines(metrics, ["mse", "mse_velocity", "seconds"]))
    return metrics


def fit_pinn(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    f64: bool = F64_OPTION,
):
    """Fit (u_x, u_y, omega) to coarse Taylor-Green observations plus PDE residuals."""
    with exit_on_error():
        cfg = ConfigLoader(config).load(FitPinnFile, seed=seed, threads=threads, f64=f64)
        with limit_threads(cfg.run.threads):
            run_fit_pinn(cfg, out)
        render_status("PINN fit complete", level="success")

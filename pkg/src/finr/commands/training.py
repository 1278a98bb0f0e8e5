# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Shared plumbing for the fit-* commands.

Builds the model from a validated config, runs the trainer with a progress
bar, streams metrics to CSV and writes periodic and final checkpoints.
"""

from pathlib import Path
from typing import Optional, Union

import typer

from finr.config import RunConfig
from finr.helpers import MetricsWriter, prepare_output, run_dtype
from finr.model import AnyModel, FInrSpec, MonolithicSpec, initialize_model, param_count
from finr.trainer.checkpoint import save_checkpoint
from finr.trainer.loop import TrainConfig, TrainResult, train
from finr.ui import TrainingProgress, render_card

CONFIG_OPTION = typer.Option(..., "--config", "-c", help="Run configuration (TOML)")
OUT_OPTION = typer.Option(..., "--out", "-o", help="Output directory")
SEED_OPTION = typer.Option(None, "--seed", help="Override [run].seed")
THREADS_OPTION = typer.Option(None, "--threads", help="Cap BLAS threads (falls back to FINR_THREADS)")
F64_OPTION = typer.Option(False, "--f64", help="Use 64-bit precision")

FINAL_CHECKPOINT = "checkpoint.finr"


def describe(spec: Union[FInrSpec, MonolithicSpec], model: AnyModel) -> str:
    net = spec.networks[0]
    if isinstance(spec, MonolithicSpec):
        layout = f"Coordinate MLP baseline over d={spec.d}"
    else:
        layout = f"Mode: {spec.mode}   ranks: {', '.join(map(str, spec.ranks))}"
    return "\n".join(
        [
            layout,
            f"Backend: {net.activation.kind} · encoding {net.encoding.kind} · "
            f"{net.layers} x {net.width}",
            f"Parameters: {param_count(model):,}",
        ]
    )


def fit(
    label: str,
    run: RunConfig,
    spec: Union[FInrSpec, MonolithicSpec],
    task,
    out: Path,
    task_settings: dict,
) -> tuple[AnyModel, TrainResult, list[str]]:
    """Train a fresh model; returns it, the result and the files written."""
    out = prepare_output(out)
    model = initialize_model(spec, run.seed, run_dtype(run.f64))
    train_config = TrainConfig(
        steps=run.steps,
        seed=run.seed,
        learning_rate=run.learning_rate,
        log_interval=run.log_interval,
        checkpoint_interval=run.checkpoint_interval,
    )
    render_card(label, describe(spec, model), footer=f"Writing results to {out}")

    outputs = ["metrics.csv", "timing.csv", FINAL_CHECKPOINT]

    def periodic(ckpt) -> None:
        name = f"checkpoint_{ckpt.step:06d}.finr"
        save_checkpoint(out / name, ckpt)
        outputs.append(name)

    with MetricsWriter(out) as writer, TrainingProgress(label, run.steps) as progress:

        def on_report(entry) -> None:
            writer.write(entry)
            progress.report(entry)

        result = train(
            model,
            task,
            train_config,
            on_report=on_report,
            on_step=progress.advance,
            on_checkpoint=periodic,
            task_settings=task_settings,
        )
    save_checkpoint(out / FINAL_CHECKPOINT, result.checkpoint)
    return model, result, outputs


def summary_lines(metrics: dict, names: Optional[list[str]] = None) -> str:
    names = names or sorted(metrics)
    return "\n".join(f"{name}: {metrics[name]:.6g}" for name in names if name in metrics)

# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
The training loop.

Each step samples from the task with the training generator, builds the
loss on a fresh tape, runs one reverse pass and one Adam update. Reports are
computed on a non-recording tape with a freshly seeded evaluation generator,
so logging never perturbs the training trajectory.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from finr.autodiff.tape import Tape
from finr.errors import ContractError, NumericFailure
from finr.tasks.metrics import MetricReport
from finr.trainer import rng as streams
from finr.trainer.adam import AdamState, adam_step
from finr.trainer.checkpoint import Checkpoint

REPORTED = ("psnr", "ssim", "iou", "mse")


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 50000
    seed: int = 0
    learning_rate: float = 1e-4
    log_interval: int = 100
    checkpoint_interval: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ContractError("step count must be non-negative")
        if self.log_interval < 1:
            raise ContractError("log interval must be positive")


@dataclass
class TrainResult:
    reports: list[MetricReport]
    checkpoint: Checkpoint
    extras: dict = field(default_factory=dict)

    @property
    def final(self) -> MetricReport:
        return self.reports[-1]


def _scalar(x) -> float:
    return float(getattr(x, "value", x))


def report(model, task, step: int, seed: int, seconds: float = 0.0) -> tuple[MetricReport, dict]:
    """Loss and task metrics at the current parameters, without touching training state."""
    loss, components = task.training_loss(model, Tape(grad_enabled=False), streams.generator(seed, streams.EVAL))
    metrics = task.evaluate(model)
    entry = MetricReport(
        step=step,
        loss=_scalar(loss),
        components={name: _scalar(v) for name, v in components.items()},
        seconds=seconds,
        **{k: metrics[k] for k in REPORTED if k in metrics},
    )
    return entry, metrics


def train(
    model,
    task,
    config: TrainConfig,
    *,
    resume: Optional[Checkpoint] = None,
    on_report: Optional[Callable[[MetricReport], None]] = None,
    on_step: Optional[Callable[[int], None]] = None,
    on_checkpoint: Optional[Callable[[Checkpoint], None]] = None,
    task_settings: Optional[dict] = None,
) -> TrainResult:
    """Fit ``model`` to ``task`` for ``config.steps`` total steps."""
    task.check(model)
    params = model.params()

    if resume is not None:
        adam, rng, start = resume.adam, streams.load_state(resume.rng_state), resume.step
    else:
        adam = AdamState.for_params(params, config.learning_rate)
        rng, start = streams.generator(config.seed, streams.TRAIN), 0

    reports: list[MetricReport] = []
    extras: dict = {}
    began = time.perf_counter()

    def emit(step: int) -> None:
        entry, metrics = report(model, task, step, config.seed, time.perf_counter() - began)
        extras.update(metrics)
        reports.append(entry)
        if on_report is not None:
            on_report(entry)

    def snapshot(step: int) -> Checkpoint:
        return Checkpoint.capture(model, adam, step, streams.dump_state(rng), task_settings)

    if start == 0:
        emit(0)

    for step in range(start, config.steps):
        tape = Tape()
        loss, _ = task.training_loss(model, tape, rng)
        value = _scalar(loss)
        if not math.isfinite(value):
            raise NumericFailure(f"loss became {value} at step {step}")
        tape.backward(loss)
        adam_step(adam, params)

        done = step + 1
        if on_step is not None:
            on_step(done)
        if done % config.log_interval == 0 or done == config.steps:
            emit(done)
        if config.checkpoint_interval and done % config.checkpoint_interval == 0 and on_checkpoint:
            on_checkpoint(snapshot(done))

    return TrainResult(reports, snapshot(max(start, config.steps)), extras)

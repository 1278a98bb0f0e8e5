# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
`finr bench`: full-grid timing of factorized models against a coordinate MLP.

For every grid size n, rank r and mode, times one forward pass over the
n^d grid (and optionally forward+backward) as the median of ``reps``
repetitions after one discarded warm-up. Slopes of log(seconds) against
log(n) are fitted per series; for d=2 the factorized series must stay at or
below 1.4 and the baseline at or above 1.7.
"""

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import stats

from finr.autodiff import tape as ops
from finr.autodiff.tape import Tape
from finr.backends.subnetwork import EncodingSpec
from finr.commands.training import CONFIG_OPTION, F64_OPTION, OUT_OPTION, SEED_OPTION, THREADS_OPTION
from finr.config import BenchFile, ConfigLoader
from finr.errors import NumericFailure
from finr.helpers import exit_on_error, limit_threads, prepare_output, run_dtype, write_manifest
from finr.model import FInrModel, FInrSpec, MonolithicModel, MonolithicSpec, eval_grid, predict_cost
from finr.ui import Spinner, render_card, render_status, render_table

FACTORIZED_MAX_SLOPE = 1.4
MONOLITHIC_MIN_SLOPE = 1.7
MIN_R_SQUARED = 0.98

BENCH_COLUMNS = ("model", "mode", "pass", "n", "r", "m", "l", "reps", "median_seconds", "predicted_macs")
SLOPE_COLUMNS = ("model", "mode", "pass", "r", "slope", "intercept", "r_squared", "points")


@dataclass(frozen=True)
class Timing:
    model: str
    mode: str
    pass_: str
    n: int
    r: Optional[int]
    m: int
    l: int
    reps: int
    seconds: float
    macs: int

    def row(self) -> list:
        return [
            self.model,
            self.mode,
            self.pass_,
            self.n,
            "" if self.r is None else self.r,
            self.m,
            self.l,
            self.reps,
            repr(self.seconds),
            self.macs,
        ]


@dataclass(frozen=True)
class SlopeFit:
    model: str
    mode: str
    pass_: str
    r: Optional[int]
    slope: float
    intercept: float
    r_squared: float
    points: int

    def row(self) -> list:
        return [
            self.model,
            self.mode,
            self.pass_,
            "" if self.r is None else self.r,
            repr(self.slope),
            repr(self.intercept),
            repr(self.r_squared),
            self.points,
        ]


def median_seconds(fn: Callable[[], object], reps: int) -> float:
    """Median wall time of ``reps`` calls after one discarded warm-up."""
    fn()
    samples = []
    for _ in range(reps):
        began = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - began)
    return float(np.median(samples))


def forward_backward(params, evaluate: Callable[[Tape], object]) -> None:
    tape = Tape()
    tape.backward(ops.reduce_sum(evaluate(tape)))
    for p in params:
        p.zero_grad()


def fit_slope(ns, seconds) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of log(seconds) against log(n)."""
    fit = stats.linregress(np.log(np.asarray(ns, dtype=np.float64)), np.log(np.asarray(seconds)))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


def baseline_spec(cfg: BenchFile, network) -> MonolithicSpec:
    if network.encoding.kind == "featuregrid":
        network = network.model_copy(update={"encoding": EncodingSpec()})
    return MonolithicSpec(
        network=network.model_copy(update={"output_dim": 1}),
        channels=1,
        domains=((-1.0, 1.0),) * cfg.bench.dims,
    )


def run_bench(cfg: BenchFile, out: Path) -> tuple[list[Timing], list[SlopeFit]]:
    bench = cfg.bench
    out = prepare_output(out)
    dtype = run_dtype(cfg.run.f64)
    d = bench.dims
    domains = [(-1.0, 1.0)] * d
    network = cfg.model.network.model_copy(update={"width": bench.width, "layers": bench.layers}).to_spec()
    m, l = bench.width, bench.layers
    passes = ["forward", "backward"] if bench.backward else ["forward"]

    if bench.reps == 1:
        render_status("reps = 1: medians of a single sample are unstable", level="warning")

    timings: list[Timing] = []
    for mode in bench.modes:
        for r in bench.ranks:
            spec = FInrSpec.uniform(mode, r, network, domains, channels=1)
            model = FInrModel.initialize(spec, cfg.run.seed, dtype)
            params = model.params()
            for n in bench.sizes:
                coords = [np.linspace(-1.0, 1.0, n)] * d
                macs = predict_cost(mode, n, m, l, r, d).macs
                with Spinner(f"{mode} r={r} n={n}"):
                    seconds = median_seconds(lambda: eval_grid(model, coords), bench.reps)
                    timings.append(Timing("factorized", mode, "forward", n, r, m, l, bench.reps, seconds, macs))
                    if "backward" in passes:
                        seconds = median_seconds(
                            lambda: forward_backward(params, lambda tape: eval_grid(model, coords, tape=tape).value),
                            bench.reps,
                        )
                        timings.append(
                            Timing("factorized", mode, "backward", n, r, m, l, bench.reps, seconds, macs)
                        )

    baseline = MonolithicModel.initialize(baseline_spec(cfg, network), cfg.run.seed, dtype)
    for n in bench.sizes:
        coords = [np.linspace(-1.0, 1.0, n)] * d
        macs = predict_cost("monolithic", n, m, l, 0, d).macs
        with Spinner(f"monolithic n={n}"):
            seconds = median_seconds(lambda: baseline.eval_grid(coords), bench.reps)
            timings.append(Timing("monolithic", "monolithic", "forward", n, None, m, l, bench.reps, seconds, macs))
            if "backward" in passes and n**d <= bench.monolithic_backward_points:
                seconds = median_seconds(
                    lambda: forward_backward(baseline.params(), lambda tape: baseline.eval_grid(coords, tape=tape)),
                    bench.reps,
                )
                timings.append(
                    Timing("monolithic", "monolithic", "backward", n, None, m, l, bench.reps, seconds, macs)
                )

    fits = fit_series(timings)
    write_csv(out / "bench.csv", BENCH_COLUMNS, [t.row() for t in timings])
    write_csv(out / "slopes.csv", SLOPE_COLUMNS, [f.row() for f in fits])
    write_manifest(
        out, "bench", ConfigLoader.snapshot(cfg), cfg.run.seed, ["bench.csv", "slopes.csv", "manifest.json"]
    )
    return timings, fits


def fit_series(timings: list[Timing]) -> list[SlopeFit]:
    series: dict[tuple, list[Timing]] = {}
    for t in timings:
        series.setdefault((t.model, t.mode, t.pass_, t.r), []).append(t)
    fits = []
    for (model, mode, pass_, r), rows in series.items():
        if len(rows) < 2:
            continue
        slope, intercept, r2 = fit_slope([t.n for t in rows], [t.seconds for t in rows])
        fits.append(SlopeFit(model, mode, pass_, r, slope, intercept, r2, len(rows)))
    return fits


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def speedups(timings: list[Timing], pass_: str = "forward") -> dict[tuple[str, int], tuple[float, float]]:
    """Measured and predicted baseline-over-factorized ratios at the largest grid, per (mode, r)."""
    largest = max(t.n for t in timings)
    at_max = [t for t in timings if t.n == largest and t.pass_ == pass_]
    reference = next((t for t in at_max if t.model == "monolithic"), None)
    if reference is None:
        return {}
    return {
        (t.mode, t.r): (reference.seconds / t.seconds, reference.macs / t.macs)
        for t in at_max
        if t.model == "factorized"
    }


def check_slopes(fits: list[SlopeFit]) -> list[str]:
    """Forward-pass slope and fit-quality violations for d=2 grids."""
    problems = []
    for fit in fits:
        if fit.pass_ != "forward":
            continue
        if fit.r_squared < MIN_R_SQUARED:
            problems.append(f"{fit.mode} r={fit.r} fit has R² {fit.r_squared:.3f} below {MIN_R_SQUARED}")
        if fit.model == "factorized" and fit.slope > FACTORIZED_MAX_SLOPE:
            problems.append(f"{fit.mode} r={fit.r} slope {fit.slope:.3f} exceeds {FACTORIZED_MAX_SLOPE}")
        if fit.model == "monolithic" and fit.slope < MONOLITHIC_MIN_SLOPE:
            problems.append(f"monolithic slope {fit.slope:.3f} is below {MONOLITHIC_MIN_SLOPE}")
    return problems


def bench(
    config: Path = CONFIG_OPTION,
    out: Path = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    f64: bool = F64_OPTION,
):
    """Time full-grid passes of factorized models and the coordinate MLP."""
    with exit_on_error():
        cfg = ConfigLoader(config).load(BenchFile, seed=seed, threads=threads, f64=f64)
        with limit_threads(cfg.run.threads):
            timings, fits = run_bench(cfg, out)

        render_table(
            "Log-log slopes",
            ["model", "mode", "pass", "r", "slope", "R²"],
            [
                [f.model, f.mode, f.pass_, "" if f.r is None else str(f.r), f"{f.slope:.3f}", f"{f.r_squared:.4f}"]
                for f in fits
            ],
        )
        ratios = speedups(timings)
        if ratios:
            largest = max(t.n for t in timings)
            render_card(
                f"Speedup at n={largest}",
                "\n".join(
                    f"{mode} r={r}: {measured:.1f}x measured, {predicted:.1f}x predicted"
                    for (mode, r), (measured, predicted) in ratios.items()
                ),
            )
        for fit in fits:
            if fit.r_squared < MIN_R_SQUARED:
                render_status(
                    f"{fit.model} {fit.mode} {fit.pass_} fit has R² {fit.r_squared:.3f} < {MIN_R_SQUARED}",
                    level="warning",
                )

        if cfg.bench.assert_slopes and cfg.bench.dims == 2:
            problems = check_slopes(fits)
            if problems:
                raise NumericFailure("scaling check failed: " + "; ".join(problems))
        render_status("Benchmark complete", level="success")

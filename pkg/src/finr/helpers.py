# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
finr Shared Utility Functions.

Helpers used by every command: error-to-exit-code mapping, the BLAS thread
cap, output directories, run manifests and the metrics CSV writers.
"""

import csv
import json
import subprocess
from contextlib import contextmanager, nullcontext
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from threadpoolctl import threadpool_limits

from finr import __version__
from finr.errors import FinrError
from finr.tasks.metrics import METRIC_COLUMNS, MetricReport
from finr.ui import render_status

TIMING_COLUMNS = ("step", "seconds")


@contextmanager
def exit_on_error():
    """Render finr errors and exit with their mapped code."""
    try:
        yield
    except FinrError as e:
        render_status(str(e), level="error", footer=type(e).__name__)
        raise typer.Exit(code=e.exit_code)


def limit_threads(threads: Optional[int]):
    """Cap BLAS/OpenMP threads for the duration of a run; no-op when unset."""
    if threads is None:
        return nullcontext()
    return threadpool_limits(limits=threads)


def run_dtype(f64: bool):
    return np.float64 if f64 else np.float32


def prepare_output(out: Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def engine_version() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        result = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            capture_output=True,
            text=True,
            check=False,
            cwd=Path(__file__).resolve().parent,
        )
    except OSError:
        return __version__
    described = result.stdout.strip()
    return described if result.returncode == 0 and described else __version__


def write_manifest(out: Path, command: str, config: dict, seed: int, outputs: list[str]) -> Path:
    """Everything needed to rerun a command and locate its results."""
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "engine_version": engine_version(),
        "outputs": sorted(outputs),
    }
    path = Path(out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class MetricsWriter:
    """Streams metric rows to metrics.csv and wall-clock times to timing.csv."""

    def __init__(self, out: Path):
        self.metrics_path = Path(out) / "metrics.csv"
        self.timing_path = Path(out) / "timing.csv"
        self._metrics = open(self.metrics_path, "w", newline="", encoding="utf-8")
        self._timing = open(self.timing_path, "w", newline="", encoding="utf-8")
        self._metric_rows = csv.DictWriter(self._metrics, fieldnames=METRIC_COLUMNS, lineterminator="\n")
        self._timing_rows = csv.writer(self._timing, lineterminator="\n")
        self._metric_rows.writeheader()
        self._timing_rows.writerow(TIMING_COLUMNS)

    def write(self, report: MetricReport) -> None:
        self._metric_rows.writerow(report.row())
        self._timing_rows.writerow([report.step, f"{report.seconds:.6f}"])
        self._metrics.flush()
        self._timing.flush()

    def close(self) -> None:
        self._metrics.close()
        self._timing.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

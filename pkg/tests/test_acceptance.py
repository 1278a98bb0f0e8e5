"""Desk-scale end-to-end runs. Slow: minutes of single-threaded CPU each."""

import numpy as np
import pytest

from finr.commands.bench import MIN_R_SQUARED, check_slopes, run_bench, speedups
from finr.commands.fit_image import run_fit_image
from finr.commands.fit_pinn import run_fit_pinn
from finr.commands.fit_sdf import run_fit_sdf
from finr.config import BenchFile, FitImageFile, FitPinnFile, FitSdfFile
from finr.helpers import limit_threads

pytestmark = [pytest.mark.slow, pytest.mark.integration]


def losses(out):
    rows = (out / "metrics.csv").read_text(encoding="utf-8").splitlines()[1:]
    return np.array([float(row.split(",")[1]) for row in rows])


def assert_loss_trend(out):
    """Median loss over the last tenth of the rows is below the first tenth."""
    values = losses(out)
    tenth = max(1, len(values) // 10)
    assert np.median(values[-tenth:]) < np.median(values[:tenth])


def test_image_fit(tmp_path):
    cfg = FitImageFile.model_validate(
        {
            "run": {"steps": 5000, "log_interval": 250, "f64": False, "threads": 1},
            "model": {"mode": "CP", "rank": 16, "network": {"activation": "sine", "layers": 3, "width": 128}},
            "image": {"height": 64, "width": 64, "channels": 3},
        }
    )
    with limit_threads(1):
        metrics = run_fit_image(cfg, tmp_path)

    assert metrics["psnr"] >= 35.0
    assert metrics["ssim"] >= 0.95
    assert_loss_trend(tmp_path)


def test_sdf_fit(tmp_path):
    cfg = FitSdfFile.model_validate(
        {
            "run": {"steps": 4000, "log_interval": 200, "learning_rate": 5e-4},
            "model": {"mode": "TT", "rank": 32, "network": {"activation": "sine", "layers": 3, "width": 128}},
            "sdf": {"shape": "sphere", "resolution": 48},
        }
    )
    with limit_threads(1):
        metrics = run_fit_sdf(cfg, tmp_path)

    assert metrics["iou"] >= 0.98
    assert metrics["eikonal"] < 0.1
    assert_loss_trend(tmp_path)


def test_pinn_fit(tmp_path):
    cfg = FitPinnFile.model_validate(
        {
            "run": {"steps": 20000, "log_interval": 1000, "learning_rate": 1e-3},
            "model": {
                "mode": "TT",
                "rank": 32,
                "network": {"activation": "relu", "encoding": "fourier", "levels": 6, "layers": 3, "width": 64},
            },
            "pinn": {"nu": 0.01, "observations": [6, 32, 32], "collocation_layout": "grid"},
        }
    )
    with limit_threads(1):
        metrics = run_fit_pinn(cfg, tmp_path)

    assert metrics["mse"] <= 5e-3
    assert_loss_trend(tmp_path)


def test_scaling_separation(tmp_path):
    cfg = BenchFile.model_validate(
        {"bench": {"sizes": [64, 128, 256, 512], "ranks": [16], "modes": ["CP"], "backward": False, "reps": 5}}
    )
    with limit_threads(1):
        timings, fits = run_bench(cfg, tmp_path)

    assert check_slopes(fits) == []
    assert all(fit.r_squared >= MIN_R_SQUARED for fit in fits)
    measured, _ = speedups(timings)[("CP", 16)]
    assert measured >= 3.0

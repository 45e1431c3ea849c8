"""Smoke tests for the plots."""
import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
import pytest

from src.evaluation.harness import HarnessConfig, MonteCarloResults
from src.visualization.visualizer import Visualizer


@pytest.fixture
def tables():
    rng = np.random.default_rng(0)
    runs = pd.DataFrame({
        "run": range(20),
        "srocc": rng.uniform(0.7, 0.9, 20),
        "srocc[mean_std]": rng.uniform(0.6, 0.9, 20),
        "srocc[quantile]": rng.uniform(0.6, 0.9, 20),
    })
    sweep = pd.DataFrame({
        "train_ratio": [0.2, 0.5, 0.8],
        "median_srocc": [0.6, 0.7, 0.8],
        "median_plcc": [0.62, 0.71, 0.79],
    })
    objective = np.linspace(0, 1, 30)
    scatter = pd.DataFrame({
        "image_id": [f"i{k}" for k in range(30)],
        "subjective": 5 * objective + rng.normal(0, 0.2, 30),
        "objective": objective,
        "mapped": 5 * objective,
    })
    scatter["band_lo"] = scatter["mapped"] - 0.4
    scatter["band_hi"] = scatter["mapped"] + 0.4
    return runs, sweep, scatter


def test_every_plot_is_written(tmp_path, tables):
    """Each plot saves a PNG."""
    runs, sweep, scatter = tables
    visualizer = Visualizer(runs=runs, sweep=sweep, scatter=scatter)
    visualizer.plot_ratio_sweep(str(tmp_path / "sweep.png"))
    visualizer.plot_srocc_distribution(str(tmp_path / "srocc.png"))
    visualizer.plot_scatter_band(str(tmp_path / "scatter.png"))
    visualizer.create_summary_dashboard(str(tmp_path / "dashboard.png"))

    for name in ("sweep", "srocc", "scatter", "dashboard"):
        assert (tmp_path / f"{name}.png").stat().st_size > 0


def test_missing_tables(tmp_path, tables):
    """The dashboard skips absent tables; single plots need theirs."""
    _, sweep, _ = tables
    visualizer = Visualizer(sweep=sweep)
    visualizer.create_summary_dashboard(str(tmp_path / "dashboard.png"))

    assert (tmp_path / "dashboard.png").exists()
    with pytest.raises(ValueError):
        visualizer.plot_scatter_band(str(tmp_path / "scatter.png"))


def test_from_results(tmp_path, tables):
    """Monte-Carlo results feed the run table directly."""
    runs, _, _ = tables
    results = MonteCarloResults(HarnessConfig(n_runs=len(runs)))
    for row in runs.to_dict(orient="records"):
        results.record_run({**row, "status": "ok"})

    visualizer = Visualizer.from_results(results)
    visualizer.plot_srocc_distribution(str(tmp_path / "srocc.png"))

    assert len(visualizer.runs) == 20
    assert (tmp_path / "srocc.png").stat().st_size > 0

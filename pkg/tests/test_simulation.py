import csv
import io
import math

import numpy as np
import pytest
from scipy.stats import norm

from gplinear.model import TestConfig
from gplinear.simulation import (
    GRID_COLUMNS,
    Scenario,
    coefficient_function,
    design_points,
    generate,
    rows_to_csv,
    run_grid,
    summarize,
)


def test_design_points_symmetric():
    x = design_points(10)
    np.testing.assert_allclose(x, -x[::-1])
    assert x.min() > -3 and x.max() < 3
    np.testing.assert_allclose(np.diff(x), 0.6)


@pytest.mark.parametrize("kind", ["bump", "step"])
def test_null_is_pure_noise(kind):
    d = generate(Scenario(kind, 0.0, 30), rng=np.random.default_rng(0))
    noise = 0.1 * np.random.default_rng(0).standard_normal(30)
    np.testing.assert_array_equal(d.y, noise)
    assert d.k == 0


def test_bump_peak():
    assert coefficient_function("bump", 0.5, 0.0) == pytest.approx(1.5 * norm.pdf(0))
    assert 1.5 * norm.pdf(0) == pytest.approx(0.5984, abs=1e-4)


def test_step_mean_function():
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    np.testing.assert_allclose(coefficient_function("step", 0.3, x) * x, [0, 0, 0.15, 0.6])


@pytest.mark.parametrize("kwargs", [
    {"kind": "wave"}, {"h": -0.1}, {"n": 9}, {"sigma": 0.0},
])
def test_scenario_validation(kwargs):
    with pytest.raises(ValueError):
        Scenario(**kwargs)


def test_unknown_kind():
    with pytest.raises(ValueError):
        coefficient_function("wave", 0.1, 0.0)


def test_grid_rows_and_order():
    cfg = TestConfig(n_quad=64)
    rows = run_grid([0.0, 0.5], [20], scales=("small", "large"), replications=2, cfg=cfg)
    assert len(rows) == 2 * 1 * 2 * 2
    assert [r["h"] for r in rows] == [0.0] * 4 + [0.5] * 4
    assert [r["scale"] for r in rows[:2]] == ["small", "large"]
    assert all(math.isnan(r["mc_se"]) for r in rows)


def test_cells_do_not_depend_on_grid():
    cfg = TestConfig(n_quad=64)
    a = run_grid([0.5], [20], scales=("medium",), replications=2, cfg=cfg)
    b = run_grid([0.0, 0.5], [20, 50], scales=("medium",), replications=2, cfg=cfg)
    picked = [r for r in b if r["h"] == 0.5 and r["n"] == 20]
    assert [r["log_bf01"] for r in a] == [r["log_bf01"] for r in picked]


def test_parallel_matches_serial():
    cfg = TestConfig(n_quad=64)
    a = run_grid([0.2], [20], scales=("medium",), replications=3, cfg=cfg, n_jobs=1)
    b = run_grid([0.2], [20], scales=("medium",), replications=3, cfg=cfg, n_jobs=2)
    assert rows_to_csv(a) == rows_to_csv(b)


def test_failed_cell_recorded(monkeypatch):
    from gplinear import simulation
    from gplinear.model import NumericalFailure

    def boom(*args, **kwargs):
        raise NumericalFailure("forced", xi=1.0)

    monkeypatch.setattr(simulation, "log_bf01", boom)
    rows = run_grid([0.1], [20], scales=("medium",), replications=1)
    assert math.isnan(rows[0]["log_bf01"])


def test_summarize_and_csv():
    rows = [
        {"kind": "bump", "h": 0.0, "n": 20, "scale": "medium", "rep": r,
         "log_bf01": v, "mc_se": math.nan}
        for r, v in enumerate([1.0, 2.0, 3.0])
    ]
    (s,) = summarize(rows)
    assert s["mean_log_bf01"] == 2.0
    assert s["se"] == pytest.approx(1 / math.sqrt(3))
    text = rows_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0]) == GRID_COLUMNS
    assert parsed[1]["log_bf01"] == "2.0" and parsed[1]["mc_se"] == ""


def test_null_and_alternative_direction():
    cfg = TestConfig(n_quad=64)
    rows = run_grid([0.0, 0.5], [50], scales=("medium",), replications=3, cfg=cfg)
    means = {s["h"]: s["mean_log_bf01"] for s in summarize(rows)}
    assert means[0.0] > 0 > means[0.5]

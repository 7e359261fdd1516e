import csv
import io
import math

import numpy as np
import pytest

from gplinear import cli
from gplinear.dataio import RunReport, dataset_to_csv
from gplinear.model import NumericalFailure
from gplinear.simulation import Scenario, generate


def _write(path, data):
    path.write_text(dataset_to_csv(data))
    return str(path)


def _run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def _report(path):
    return RunReport.from_json(open(path).read())


@pytest.fixture
def linear_csv(tmp_path):
    return _write(tmp_path / "linear.csv", generate(Scenario("bump", 0.0, 200, seed=1)))


@pytest.fixture
def bump_csv(tmp_path):
    return _write(tmp_path / "bump.csv", generate(Scenario("bump", 0.5, 200, seed=1)))


@pytest.fixture
def small_csv(tmp_path):
    return _write(tmp_path / "small.csv", generate(Scenario("bump", 0.5, 20, seed=2)))


def _xy_csv(path, x, y):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "x"])
        w.writerows((repr(float(a)), repr(float(b))) for a, b in zip(y, x))
    return str(path)


class TestTestCommand:
    def test_linear_favors_m0(self, linear_csv, tmp_path):
        js = str(tmp_path / "r.json")
        code, text = _run(["test", linear_csv, "--scale", "medium", "--json", js])
        assert code == 0 and "log B01=" in text
        (res,) = _report(js).results
        assert res["log_bf01"] > 0
        assert res["posterior_prob_linear"] + res["posterior_prob_nonlinear"] == pytest.approx(1)

    def test_bump_favors_m1_at_all_scales(self, bump_csv, tmp_path):
        js = str(tmp_path / "r.json")
        assert _run(["test", bump_csv, "--json", js])[0] == 0
        results = _report(js).results
        assert [r["label"] for r in results] == ["small", "medium", "large"]
        assert all(r["log_bf01"] < 0 for r in results)

    def test_scale_alias(self, linear_csv, tmp_path):
        rng = 5.97  # range of the 200 design points: 6 - 6/200
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        _run(["test", linear_csv, "--scale", "medium", "--json", a])
        _run(["test", linear_csv, "--s-xi", repr(6 * math.exp(-1) / rng), "--json", b])
        assert _report(a).results[0]["log_bf01"] == _report(b).results[0]["log_bf01"]

    def test_importance(self, small_csv, tmp_path):
        js = str(tmp_path / "r.json")
        code, text = _run(["test", small_csv, "--method", "importance", "--n-is", "1000",
                           "--scale", "medium", "--json", js])
        assert code == 0 and "mc_se=" in text
        assert _report(js).results[0]["mc_se"] > 0

    def test_dataset_summary(self, tmp_path):
        x = np.linspace(1, 4, 12)
        y = 0.5 * x + np.sin(x)
        path = _xy_csv(tmp_path / "d.csv", x, y)
        js = str(tmp_path / "r.json")
        assert _run(["test", path, "--intercept", "--center", "--json", js])[0] == 0
        ds = _report(js).dataset
        assert ds["n"] == 12 and ds["k"] == 1
        assert {c["check"]: c["ok"] for c in ds["checks"]}["orthogonality"]


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert _run(["test", str(tmp_path / "nope.csv")])[0] == 3

    def test_bad_cell(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("y,x\n1,2\n2,oops\n3,4\n")
        assert _run(["test", str(p)])[0] == 3

    def test_constant_predictor(self, tmp_path):
        path = _xy_csv(tmp_path / "c.csv", [1.0] * 5, [1.0, 2.0, 3.0, 4.0, 5.0])
        assert _run(["test", path])[0] == 3

    def test_numerical_failure(self, small_csv, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericalFailure("forced", xi=2.0)

        monkeypatch.setattr(cli, "log_bf01", boom)
        assert _run(["test", small_csv])[0] == 4

    @pytest.mark.parametrize("argv", [
        ["simulate", "--h", "0:0.5"],
        ["simulate", "--h", "0.5:0:0.1"],
        ["simulate", "--n", "20,abc"],
        ["simulate", "--kinds", "wave"],
        ["simulate", "--n", "5"],
        ["test"],
        ["frobnicate"],
    ])
    def test_usage(self, argv):
        assert _run(argv)[0] == 2

    @pytest.mark.parametrize("cmd", ["onesided", "draws"])
    def test_zero_draws(self, cmd, small_csv, tmp_path):
        js = tmp_path / "r.json"
        code, text = _run([cmd, small_csv, "--draws", "0", "--json", str(js)])
        assert code == 2 and text == "" and not js.exists()


class TestOneSided:
    def test_monotone(self, tmp_path):
        rng = np.random.default_rng(0)
        x = np.linspace(-1, 1, 20)
        path = _xy_csv(tmp_path / "m.csv", x, 2 * x + 0.05 * rng.standard_normal(20))
        js = str(tmp_path / "r.json")
        assert _run(["onesided", path, "--draws", "10000", "--json", js])[0] == 0
        os_ = _report(js).one_sided
        assert os_["bf_u"]["pos"] > 1
        assert os_["bf"]["pos_neg"] == math.inf
        assert "bf_pos_neg=inf" in os_["flags"]

    def test_u_shape(self, tmp_path):
        rng = np.random.default_rng(0)
        x = np.linspace(-1, 1, 20)
        path = _xy_csv(tmp_path / "u.csv", x, x**2 + 0.05 * rng.standard_normal(20))
        js = str(tmp_path / "r.json")
        assert _run(["onesided", path, "--draws", "2000", "--json", js])[0] == 0
        assert _report(js).one_sided["posterior"]["comp"] > 0.9


class TestSimulate:
    def test_row_count(self, tmp_path):
        out = tmp_path / "grid.csv"
        code, _ = _run(["simulate", "--h", "0:0.5:0.1", "--n", "20,50,200", "--scales", "all",
                        "--reps", "1", "--n-quad", "32", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 3 * 6 * 3 * 1
        assert sorted({float(r["h"]) for r in rows}) == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]

    def test_stdout(self):
        code, text = _run(["simulate", "--h", "0.2", "--n", "20", "--reps", "2",
                           "--scales", "medium", "--n-quad", "32"])
        assert code == 0
        assert text.splitlines()[0] == "kind,h,n,scale,rep,log_bf01,mc_se"
        assert len(text.splitlines()) == 3


class TestDraws:
    def test_row_count_and_layout(self, small_csv, tmp_path):
        out = tmp_path / "draws.csv"
        assert _run(["draws", small_csv, "--draws", "5", "--out", str(out)])[0] == 0
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 20 + 5 * 20 * 2
        assert [r["series"] for r in rows[:20]] == ["observed"] * 20
        assert {r["series"] for r in rows[20:]} == {"mean", "slope"}

    def test_default_draws(self, small_csv, tmp_path):
        out = tmp_path / "draws.csv"
        assert _run(["draws", small_csv, "--out", str(out), "--grid-density", "10"])[0] == 0
        assert sum(1 for _ in open(out)) - 1 == 20 + 50 * 10 * 2


class TestSeeds:
    def test_default_seed_echoed(self, small_csv):
        _, text = _run(["test", small_csv, "--scale", "medium"])
        assert f"seed={cli.DEFAULT_SEED}" in text

    def test_env_seed(self, small_csv, monkeypatch, tmp_path):
        monkeypatch.setenv(cli.SEED_ENV, "77")
        monkeypatch.setenv(cli.THREADS_ENV, "2")
        js = str(tmp_path / "r.json")
        _run(["onesided", small_csv, "--draws", "20", "--json", js])
        cfg = _report(js).config
        assert cfg["seed"] == 77 and cfg["threads"] == 2

    def test_seed_changes_output(self, small_csv):
        a = _run(["draws", small_csv, "--draws", "3", "--seed", "1"])[1]
        b = _run(["draws", small_csv, "--draws", "3", "--seed", "2"])[1]
        assert a != b

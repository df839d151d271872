import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from lrcov.cli import load_report, main, parse_windows
from lrcov.covariance import sample_cov
from lrcov.errors import ConfigError
from lrcov.panel import load_csv, write_csv
from lrcov.simulate import build_model2, sample_var1


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "panel.csv"
    write_csv(sample_var1(build_model2(12), 200, 3), path)
    return path


def test_windows():
    assert parse_windows("50:120:5") == list(range(50, 121, 5))
    assert parse_windows("60,80") == [60, 80]
    with pytest.raises(ConfigError):
        parse_windows("120:50:5")


def test_estimate_zero_delta(panel_csv, tmp_path):
    assert main(["estimate", str(panel_csv), "--delta", "0", "--out", str(tmp_path)]) == 0
    est = load_csv(tmp_path / "estimate.csv").data
    assert_array_equal(est, sample_cov(load_csv(panel_csv)).sigma_hat)
    rep = load_report(tmp_path / "report.json")
    assert rep["delta"] == 0.0 and rep["cv"] is None
    assert "bandwidth" in rep and rep["degenerate_pairs"] == []


def test_estimate_auto_delta(panel_csv, tmp_path):
    assert main(["estimate", str(panel_csv), "--out", str(tmp_path)]) == 0
    rep = load_report(tmp_path / "report.json")
    assert len(rep["cv"]["grid"]) == 41
    assert rep["delta"] == rep["cv"]["best_delta"]
    support = np.loadtxt(tmp_path / "support.csv", delimiter=",")
    assert_array_equal(support, load_csv(tmp_path / "estimate.csv").data != 0)


def test_universal_kernel_flags_warn(panel_csv, tmp_path, caplog):
    code = main(["estimate", str(panel_csv), "--method", "universal", "--kernel", "bartlett", "--out", str(tmp_path)])
    assert code == 0
    assert any("ignored" in r.message for r in caplog.records)


@pytest.mark.parametrize(
    "argv",
    [
        ["--method", "bogus"],
        ["--rule", "scad"],
        ["--delta", "-1"],
        ["--kernel", "gaussian"],
        ["--k-blocks", "1"],
    ],
)
def test_estimate_config_errors(panel_csv, tmp_path, argv):
    assert main(["estimate", str(panel_csv), "--out", str(tmp_path), *argv]) == 2


def test_io_and_parse_errors(tmp_path):
    assert main(["estimate", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert main(["estimate", str(bad), "--out", str(tmp_path)]) == 1


def test_simulate_sidecar(tmp_path):
    assert main(["simulate", "--model", "model2", "--p", "10", "--n", "50", "--seed", "4", "--out", str(tmp_path)]) == 0
    design = load_report(tmp_path / "design.json")
    panel = load_csv(tmp_path / "panel.csv")
    assert panel.data.shape == (50, 10)
    assert design["seed"] == 4
    sy, c, se = (np.array(design[k]) for k in ("sigma_y", "c", "sigma_eps"))
    assert np.max(np.abs(sy - c @ sy @ c.T - se)) <= 1e-10
    again = tmp_path / "again"
    main(["simulate", "--model", "model2", "--p", "10", "--n", "50", "--seed", "4", "--out", str(again)])
    assert (again / "panel.csv").read_bytes() == (tmp_path / "panel.csv").read_bytes()


def test_simulate_bad_params(tmp_path):
    assert main(["simulate", "--model", "adversarial", "--p", "10", "--n", "10", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--model", "model2", "--p", "7", "--out", str(tmp_path)]) == 2


def test_benchmark_outputs(tmp_path):
    argv = ["benchmark", "--model", "model2", "--p", "10", "--n", "60", "--reps", "1", "--rules", "hard", "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = list(csv.DictReader(open(tmp_path / "table.csv")))
    assert len(rows) == 3
    assert all(r["loss"].endswith("(0.00)") for r in rows)
    rep = load_report(tmp_path / "summary_model2_p10_n60.json")
    assert set(rep["summaries"]) == {"proposed/hard", "universal/hard", "cai-liu/hard"}
    pgm = (tmp_path / "heatmap_model2_p10_n60_proposed_hard.pgm").read_text().split("\n")
    assert pgm[:3] == ["P2", "10 10", "255"]
    freq = np.loadtxt(tmp_path / "heatmap_model2_p10_n60_proposed_hard.csv", delimiter=",")
    assert set(np.unique(freq)) <= {0, 1}


def test_benchmark_adversarial_reports_failures(tmp_path):
    argv = ["benchmark", "--model", "adversarial", "--p", "40", "--n", "400", "--c-a", "3", "--reps", "2",
            "--rules", "hard", "--out", str(tmp_path)]
    assert main(argv) == 0
    rep = load_report(tmp_path / "summary_adversarial_p40_n400.json")
    for s in rep["summaries"].values():
        assert 0 <= s["exact_recovery_failures"] <= 2
    assert rep["design_meta"]["s0"] == 2


def test_backtest_cli(tmp_path):
    y = np.random.default_rng(0).normal(0, 0.01, (120, 6))
    path = tmp_path / "ret.csv"
    write_csv(y, path)
    out = tmp_path / "out"
    code = main(["backtest", str(path), "--windows", "40:50:10", "--estimators", "sample,linear-shrinkage,proposed-hard",
                 "--out", str(out)])
    assert code == 0
    rep = load_report(out / "backtest.json")
    assert rep["hold"] == 20
    assert set(rep["results"]["sample"]) == {"40", "50"}
    rows = list(csv.DictReader(open(out / "backtest.csv")))
    assert len(rows) == 2 * 3 * 2
    assert main(["backtest", str(path), "--estimators", "sample,unknown", "--out", str(out)]) == 2
    assert main(["backtest", str(path), "--windows", "200", "--out", str(out)]) == 2


def test_rank_cli(tmp_path):
    t = np.linspace(0, 1, 30)
    noise = np.random.default_rng(1).standard_normal(30)
    x = np.c_[noise, t, 2 * t + 0.1 * noise]
    path = tmp_path / "x.csv"
    write_csv(x, path)
    assert main(["rank", str(path), "--method", "abscorr", "--top", "3", "--bottom", "0", "--out", str(tmp_path)]) == 0
    ranked = list(csv.DictReader(open(tmp_path / "ranking.csv")))
    score = [float(r["score"]) for r in ranked]
    assert score == sorted(score, reverse=True)
    order = [int(r["column"]) - 1 for r in ranked]
    assert order[-1] == 0
    reduced = load_csv(tmp_path / "reduced.csv", has_header=True)
    assert_array_equal(reduced.data, x[:, order])

    assert main(["rank", str(path), "--method", "fstat", "--out", str(tmp_path)]) == 2
    labels = tmp_path / "labels.csv"
    labels.write_text("\n".join(["a"] * 15 + ["b"] * 14) + "\n")
    assert main(["rank", str(path), "--method", "fstat", "--labels", str(labels), "--out", str(tmp_path)]) == 2
    labels.write_text("\n".join(["a"] * 15 + ["b"] * 15) + "\n")
    assert main(["rank", str(path), "--method", "fstat", "--labels", str(labels), "--top", "1", "--bottom", "1",
                 "--out", str(tmp_path)]) == 0
    reduced = load_csv(tmp_path / "reduced.csv", has_header=True)
    assert reduced.p == 2


def test_reports_are_strict_json(panel_csv, tmp_path):
    main(["estimate", str(panel_csv), "--out", str(tmp_path)])
    text = (tmp_path / "report.json").read_text()
    json.loads(text, parse_constant=lambda c: pytest.fail(f"non-standard constant {c}"))

import json
import subprocess
import sys

import numpy as np
import pytest

from adiabatic_majorization import analysis, cli
from adiabatic_majorization.errors import ConvergenceFailure
from adiabatic_majorization.majorization import MajorizationVerdict, Relation
from adiabatic_majorization.output import read_csv


def run(tmp_path, *args):
    return cli.run([*args, "--out", str(tmp_path)])


def summary(path):
    return json.loads((path / "summary.json").read_text())


def test_verify_ground_random_n6_exits_zero(tmp_path):
    assert run(tmp_path, "verify-ground", "--grid", "201", "--seed", "3") == 0
    meta, header, rows = read_csv(tmp_path / "ground_report.csv")
    assert header[0] == "s" and header[-2:] == ["deficit_to_next", "majorized"]
    assert rows.shape[0] == 201
    assert summary(tmp_path)["violation_count"] == 0
    assert meta["seed"] == 3 and len(meta["config_hash"]) == 64
    assert set(meta["tolerances"]) >= {"partial_sum_tol", "norm_tol"}


def test_figure1_small_T(tmp_path):
    assert run(tmp_path, "figure1", "--T", "10") == 0
    _, header, rows = read_csv(tmp_path / "figure1.csv")
    assert header == ["s", "A_1", "B_1_T10"]
    s, A1, B1 = rows.T
    tail = s >= 0.8
    assert np.any(np.diff(B1[tail]) < 0)
    assert np.all(np.diff(A1) >= 0)
    assert summary(tmp_path)["A1_monotone"] is True


@pytest.mark.parametrize(
    "args",
    [
        ["verify-ground", "--grid", "1"],
        ["verify-ground", "--tol", "-1"],
        ["evolve", "--dt", "0"],
        ["evolve", "--T", "-3"],
        ["gap", "--config", "/nonexistent.json"],
        ["nonsense"],
        ["verify-ground", "--family", "grover", "--n", "2", "--marked", "9"],
    ],
)
def test_config_errors_exit_one(tmp_path, args, capsys):
    with_exit = None
    try:
        with_exit = run(tmp_path, *args)
    except SystemExit as exc:
        with_exit = exc.code
    assert with_exit == 1
    assert capsys.readouterr().err


def test_malformed_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "f": [0, 1, 2, 3], "grid": 1}))
    assert run(tmp_path, "ground-curve", "--config", str(cfg)) == 1
    cfg.write_text("{not json")
    assert run(tmp_path, "ground-curve", "--config", str(cfg)) == 1


def test_inline_config_problem(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": {"n": 2, "f": [3, 1, 2, 1]}, "grid": 5, "seed": 7}))
    assert run(tmp_path, "ground-curve", "--config", str(cfg)) == 0
    meta, header, rows = read_csv(tmp_path / "ground_curve.csv")
    assert header == ["s", "t", "lambda", "A_1", "A_2", "A_3", "A_4"]
    assert meta["seed"] == 7
    np.testing.assert_allclose(rows[0, 3:], [0.25, 0.5, 0.75, 1.0], atol=1e-15)
    # lambda is reported in the original (unshifted) frame: at s = 1 it is min f
    assert rows[-1, 2] == pytest.approx(1.0, abs=1e-14)


def test_verify_ground_violation_exits_two(tmp_path, monkeypatch):
    real = analysis.ground_report

    def broken(*a, **kw):
        rep = real(*a, **kw)
        bad = MajorizationVerdict(Relation.NOT_MAJORIZED, -0.5, 1)
        return analysis.MajorizationReport(rep.grid, rep.k_list, rep.curves, (bad,) + rep.verdicts[1:])

    monkeypatch.setattr(analysis, "ground_report", broken)
    assert run(tmp_path, "verify-ground", "--grid", "11") == 2
    assert summary(tmp_path)["violation_count"] == 1


def test_numerical_failure_exits_three(tmp_path, monkeypatch):
    def boom(*a, **kw):
        raise ConvergenceFailure("secular root did not converge")

    monkeypatch.setattr(cli, "ground_state", boom)
    assert run(tmp_path, "ground-curve", "--grid", "5") == 3


@pytest.mark.parametrize(
    "args, product",
    [
        (["ground-curve", "--grid", "21"], "ground_curve.csv"),
        (["evolve", "--family", "grover", "--n", "3", "--T", "5", "--grid", "51"], "trajectory.csv"),
        (["verify-actual", "--family", "grover", "--n", "3", "--T", "5", "--grid", "51"], "trajectory_report.csv"),
        (["bounds", "--grid", "21"], "bounds.csv"),
        (["gap", "--family", "grover", "--n", "3", "--grid", "21"], "spectral_report.json"),
        (["sweep", "--family", "grover", "--n", "2", "--T", "5", "--T", "10", "--grid", "51"], "sweep.csv"),
    ],
)
def test_commands_write_products(tmp_path, args, product):
    assert run(tmp_path, *args) == 0
    assert (tmp_path / product).exists()
    keys = set(summary(tmp_path))
    assert keys >= set(cli.SUMMARY_KEYS) | {"_meta"}


def test_gap_json_has_meta(tmp_path):
    run(tmp_path, "gap", "--family", "grover", "--n", "2", "--grid", "101")
    doc = json.loads((tmp_path / "spectral_report.json").read_text())
    assert doc["_meta"]["command"] == "gap"
    # N = 4 Grover gap minimum is 1/2 at s = 1/2
    assert doc["g_min"] == pytest.approx(0.5, abs=1e-12)
    assert doc["s_at_g_min"] == pytest.approx(0.5, abs=1e-12)


def test_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["evolve", "--family", "random-int", "--n", "3", "--seed", "5", "--T", "4", "--grid", "41"]
    assert cli.run([*args, "--out", str(a)]) == 0
    assert cli.run([*args, "--out", str(b)]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_seed_changes_hash(tmp_path):
    run(tmp_path / "x", "ground-curve", "--grid", "3", "--seed", "1")
    run(tmp_path / "y", "ground-curve", "--grid", "3", "--seed", "2")
    hx = read_csv(tmp_path / "x" / "ground_curve.csv")[0]["config_hash"]
    hy = read_csv(tmp_path / "y" / "ground_curve.csv")[0]["config_hash"]
    assert hx != hy


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "adiabatic_majorization", "verify-ground", "--grid", "1", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "grid" in proc.stderr

import csv
import io
import json

import numpy as np
import pytest

from shiftreg import cli, matrix_io, oracle, problems, verification


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_fixed_point_matches_oracle(in_tmp):
    code = cli.main(["solve", "--problem", "rank_deficient:10,8,5,seed=1", "--method", "eq5",
                     "--a", "0.1", "--out", "u.txt"])
    assert code == 0
    summary = json.loads((in_tmp / "u.json").read_text())
    P = problems.rank_deficient(10, 8, 5, seed=1)
    pred = oracle.spectral_iteration_error(P.A, 0.1, -P.y, summary["steps"])
    assert summary["predicted_error"] == pytest.approx(pred, rel=1e-12)
    assert abs(summary["error"] - pred) <= 1e-10 * np.linalg.norm(P.y)
    u = matrix_io.read_vector(in_tmp / "u.txt")
    assert np.linalg.norm(u - P.y) == pytest.approx(summary["error"], rel=1e-12)
    assert summary["smoothing_norm"]["holds"]


def test_solve_converges_when_well_conditioned(in_tmp):
    code = cli.main(["solve", "--problem", "diag:2,1,0", "--method", "fixed-point", "--a", "0.5",
                     "--out", "u.txt"])
    assert code == 0
    summary = json.loads((in_tmp / "u.json").read_text())
    assert summary["converged"] and summary["error"] < 1e-12


def test_solve_missing_a_is_usage_error(capsys):
    assert cli.main(["solve", "--problem", "hilbert:4", "--method", "eq5"]) == 2
    assert "--a" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "nosuch:3", "--method", "fixed-point", "--a", "1"],
    ["solve", "--problem", "hilbert:4", "--method", "newton", "--a", "1"],
    ["solve", "--problem", "hilbert:4", "--method", "eq5", "--a", "-1"],
    ["solve", "--problem", "rank_deficient:3,3,5", "--method", "fixed-point", "--a", "1"],
    ["solve", "--problem", "file:missing_A.txt,missing_f.txt", "--method", "tikhonov", "--a", "1"],
    ["dsm", "--problem", "hilbert:3", "--h", "0.5"],
    ["dsm", "--problem", "hilbert:3", "--p", "2"],
    ["noise-study", "--problem", "diag:2,1,0", "--a", "0.5", "--delta", "0.1,0"],
    ["solve", "--problem", "hilbert:3", "--method", "selfadjoint", "--a", "1",
     "--config", "nonexistent.json"],
])
def test_bad_configurations_exit_2(argv):
    assert cli.main(argv) == 2


def test_solve_from_files(in_tmp):
    P = problems.hilbert(4)
    matrix_io.write_problem(in_tmp / "hilb", P)
    code = cli.main(["solve", "--problem", "file:hilb_A.txt,hilb_f.txt", "--method", "tikhonov",
                     "--a", "1", "--out", "z.txt"])
    assert code == 0
    z = matrix_io.read_vector(in_tmp / "z.txt")
    A = P.A.entries
    np.testing.assert_allclose(z, np.linalg.solve(A.T @ A + np.eye(4), A.T @ P.f), rtol=1e-12)


def test_solve_selfadjoint_reports_imaginary_part(in_tmp):
    code = cli.main(["solve", "--problem", "symmetric:6,seed=2", "--method", "selfadjoint",
                     "--a", "0.5", "--steps", "2000", "--out", "u.txt"])
    assert code == 0
    summary = json.loads((in_tmp / "u.json").read_text())
    assert summary["imag_norm"] <= 1e-10 and summary["error"] <= 1e-9


def test_selfadjoint_needs_symmetric_problem():
    assert cli.main(["solve", "--problem", "rank_deficient:4,4,2", "--method", "selfadjoint",
                     "--a", "1"]) == 2


def test_converge_table(in_tmp):
    a = 1.0
    assert cli.main(["converge", "--problem", "diag:1,0", "--a", str(a), "--steps", "6",
                     "--out", "c.csv"]) == 0
    rows = read_csv(in_tmp / "c.csv")
    assert list(rows[0]) == ["n", "error", "residual", "spectral_prediction"]
    # w = u1 - y = (-1, 0)
    assert float(rows[0]["error"]) == 1.0
    assert float(rows[4]["error"]) == pytest.approx((a / (a + 1)) ** 4, rel=1e-14)
    for r in rows:
        assert float(r["error"]) == pytest.approx(float(r["spectral_prediction"]), rel=1e-10)


def test_converge_to_stdout(capsys):
    assert cli.main(["converge", "--problem", "hilbert:4", "--a", "0.1", "--steps", "3"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][0] == "n" and len(rows) == 5


def test_noise_study_table(in_tmp):
    assert cli.main(["noise-study", "--problem", "diag:2,1,0", "--a", "0.5",
                     "--delta", "1e-1,1e-2,1e-3,1e-4", "--out", "n.csv"]) == 0
    rows = read_csv(in_tmp / "n.csv")
    assert list(rows[0]) == ["delta", "n_delta", "error_stopped", "envelope"]
    errs = [float(r["error_stopped"]) for r in rows]
    assert all(x >= y for x, y in zip(errs, errs[1:]))
    assert all(float(r["envelope"]) >= float(r["error_stopped"]) for r in rows)
    assert [int(r["n_delta"]) for r in rows] == [4, 10, 32, 100]


def test_dsm_trace_and_summary(in_tmp):
    assert cli.main(["dsm", "--problem", "diag:2,1,0", "--tmax", "5", "--h", "0.05",
                     "--out", "d.csv"]) == 0
    rows = read_csv(in_tmp / "d.csv")
    assert list(rows[0]) == ["step_or_time", "error", "residual"]
    assert float(rows[0]["step_or_time"]) == 0 and float(rows[-1]["step_or_time"]) == pytest.approx(5)
    summary = json.loads((in_tmp / "d.json").read_text())
    assert summary["final_error"] == pytest.approx(float(rows[-1]["error"]), rel=1e-12)


def test_dsm_discrepancy_summary(in_tmp):
    assert cli.main(["dsm", "--problem", "diag:2,1,0", "--delta", "1e-2", "--p", "1",
                     "--tmax", "500", "--h", "0.1", "--record-every", "10", "--out", "d.csv"]) == 0
    summary = json.loads((in_tmp / "d.json").read_text())
    assert summary["reached"] and 0 < summary["t_delta"] < 500


def test_flags_override_config_over_defaults(in_tmp):
    (in_tmp / "cfg.json").write_text(json.dumps(
        {"problem": "diag:1,0", "a": 1.0, "steps": 3, "out": "from_cfg.csv"}))
    assert cli.main(["converge", "--config", "cfg.json"]) == 0
    assert len(read_csv(in_tmp / "from_cfg.csv")) == 4
    assert cli.main(["converge", "--config", "cfg.json", "--steps", "5", "--out", "flag.csv"]) == 0
    assert len(read_csv(in_tmp / "flag.csv")) == 6


def test_runs_are_reproducible(in_tmp):
    argv = ["solve", "--problem", "rank_deficient:8,6,4,seed=3", "--method", "fixed-point", "--a", "0.2",
            "--delta", "1e-3", "--seed", "5"]
    assert cli.main(argv + ["--out", "one.txt"]) == 0
    assert cli.main(argv + ["--out", "two.txt"]) == 0
    assert (in_tmp / "one.txt").read_text() == (in_tmp / "two.txt").read_text()


def test_verify_detects_broken_route(monkeypatch):
    monkeypatch.setattr(verification, "tikhonov_minimizer_via_Q",
                        lambda A, p, g: 1.0001 * verification.tikhonov_minimizer(A, p, g))
    assert not verification.check_route_identity().passed


def test_verify_report_names():
    names = [c.__name__ for c in verification.QUICK_SUITE]
    assert len(names) == 6
    results = [c() for c in verification.QUICK_SUITE if c is not verification.check_smoothing_bound]
    report = verification.format_report(results)
    for name in ("eq18_identity", "lemma1_equiv", "lemma2_quadrature", "lemma3_limit"):
        assert name in report

import json
import subprocess
import sys

import pytest

from sigma2.cli import resolve_seed, run_cli


def run(capsys, *argv):
    code = run_cli(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_example(capsys):
    code, out, err = run(capsys, "verify-example", "--samples", "20", "--seed", "1")
    assert code == 0
    report = json.loads(out)
    assert report["pass"] is True
    assert report["max_eq1_norm"] <= 1e-8
    assert len(report["scalar_curvature"]["table"]) == 20
    assert "-8/(1+x^2+y^2)" in err


def test_residual_flat(capsys):
    code, out, _ = run(capsys, "residual", "--metric", "flat", "--t", "-0.375", "--point", "0,0,0")
    assert code == 0
    report = json.loads(out)
    point = report["points"][0]
    for key in ("grad_Ft_norm", "eq1_norm", "eq2_value", "weitzenbock_residual", "pde_residual", "cor34_slack"):
        assert point[key] == 0
    assert report["critical"] is True


def test_residual_non_critical_metric_exits_one(capsys):
    code, out, _ = run(capsys, "residual", "--metric", "round_sphere", "--t", "0", "--point", "1,1,0")
    assert code == 1
    assert json.loads(out)["critical"] is False


def test_residual_sphere_critical_at_minus_third(capsys):
    code, _, _ = run(capsys, "residual", "--metric", "round_sphere", "--t", str(-1 / 3), "--point", "1,1,0", "--point", "1.2,0.9,2")
    assert code == 0


def test_residual_metric_file(tmp_path, capsys):
    path = tmp_path / "m.metric"
    path.write_text('name = "warp"\ng33 = "(1 + x^2 + y^2)^2"\n')
    code, out, _ = run(capsys, "residual", "--metric", str(path), "--samples", "3")
    assert code == 0
    assert json.loads(out)["metric"] == "warp"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["residual", "--metric", "no_such_metric"],
        ["residual", "--point", "1,2"],
        ["residual", "--format", "csv"],
        ["residual", "--metric", "round_sphere", "--point", "0,0,0"],
        ["flow", "--format", "json"],
        ["flow", "--n", "7"],
        ["flow", "--amplitude", "0.5"],
        ["identities", "--seed", "-1"],
        ["identities", "--matrix-trials", "0"],
        ["verify-example", "--tol", "-1"],
    ],
)
def test_usage_errors_exit_two_without_report(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err


def test_bad_metric_file(tmp_path, capsys):
    path = tmp_path / "bad.metric"
    path.write_text('g11 = "1 +"\n')
    code, out, _ = run(capsys, "residual", "--metric", str(path))
    assert (code, out) == (2, "")


def test_identities_small(capsys):
    code, out, _ = run(capsys, "identities", "--seed", "4", "--matrix-trials", "500", "--chart-trials", "5")
    assert code == 0
    assert json.loads(out)["overall"] == "pass"


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("SIGMA2_SEED", "5")
    assert resolve_seed(None) == 5
    assert resolve_seed(7) == 7
    _, env_out, _ = run(capsys, "residual", "--samples", "2")
    _, flag_out, _ = run(capsys, "residual", "--samples", "2", "--seed", "5")
    assert env_out == flag_out
    monkeypatch.setenv("SIGMA2_SEED", "abc")
    code, out, _ = run(capsys, "residual", "--samples", "2")
    assert (code, out) == (2, "")
    code, _, _ = run(capsys, "residual", "--samples", "2", "--seed", "1")
    assert code == 0


def test_default_seed_is_zero(monkeypatch):
    monkeypatch.delenv("SIGMA2_SEED", raising=False)
    assert resolve_seed(None) == 0


def test_flow_writes_csv(tmp_path, capsys):
    out_path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "flow", "--n", "8", "--amplitude", "0.01", "--steps", "3", "--seed", "2", "--out", str(out_path))
    assert code == 0 and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0] == "step,energy,grad_norm,max_abs_ric,max_neg_R"
    assert [line.split(",")[0] for line in lines[1:]] == ["0", "1", "2", "3"]


def test_flow_is_reproducible(capsys):
    _, a, _ = run(capsys, "flow", "--steps", "2", "--seed", "9")
    _, b, _ = run(capsys, "flow", "--steps", "2", "--seed", "9")
    assert a == b and a.startswith("step,")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sigma2", "residual", "--metric", "flat", "--point", "0,0,0"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["critical"] is True

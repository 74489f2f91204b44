import csv
import io
import json
import math

import pytest

from if2ode.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_csv(capsys):
    code, out, _ = call(capsys, "solve", "--B", "3", "--C", "2", "--R", "0", "--interval", "0",
                        "2", "--ic", "1", "-1", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x", "y", "yprime"]
    at_one = [r for r in rows[1:] if float(r[0]) == 1.0]
    assert len(at_one) == 1
    assert abs(float(at_one[0][1]) - 0.367879) < 1e-6
    assert abs(float(at_one[0][1]) - math.exp(-1)) < 1e-12
    assert len(rows) == 1 + 513


def test_csv_round_trips_floats(capsys):
    _, out, _ = call(capsys, "solve", "--B", "0", "--C", "1", "--interval", "0", "1", "--ic",
                     "0", "1", "--format", "csv", "--samples", "7")
    for line in out.splitlines()[1:]:
        for field in line.split(","):
            assert format(float(field), ".17g") == field


def test_classify_text(capsys):
    code, out, _ = call(capsys, "classify", "--B", "2*x", "--C", "x^2+1", "--interval", "0", "2")
    assert code == 0
    assert out.strip() == "route: discriminant-zero, D ≡ 0"


def test_classify_reports_d_and_k(capsys):
    _, out, _ = call(capsys, "classify", "--B", "2*x", "--C", "x^2", "--interval", "0", "2")
    assert "D ≡ 4" in out and "k = D/4 = 1" in out
    _, out, _ = call(capsys, "classify", "--B", "2*x", "--C", "x^2", "--interval", "0", "2",
                     "--format", "json")
    d = json.loads(out)
    assert d["route"] == "discriminant-constant" and d["k"] == 1 and d["D_value"] == 4


def test_riccati_pole_exit_code(capsys):
    code, out, err = call(capsys, "solve", "--B", "0", "--C", "1", "--R", "0", "--interval", "0",
                          "2", "--riccati-q0", "0", "--force-route", "riccati")
    assert code == 2 and out == ""
    assert "SingularityDetected near x=1.5708; try --riccati-q0 <other>" in err
    assert "[factors]" in err


def test_negative_expressions_as_values(capsys):
    code, out, _ = call(capsys, "classify", "--B", "-2/x", "--C", "-1", "--interval", "1", "2")
    assert code == 0 and out.startswith("route: riccati")


def test_error_json_on_stderr(capsys):
    code, out, err = call(capsys, "solve", "--B", "0", "--C", "1", "--interval", "0", "2",
                          "--force-route", "riccati", "--format", "json")
    assert code == 2 and out == ""
    d = json.loads(err)
    assert d["error"] == "SingularityDetected" and d["stage"] == "factors"
    assert abs(d["x_sing"] - math.pi / 2) < 0.05


def test_complex_q0_avoids_pole(capsys):
    code, out, _ = call(capsys, "solve", "--B", "0", "--C", "1", "--interval", "0", "2",
                        "--ic", "0", "1", "--force-route", "riccati", "--riccati-q0=-1j",
                        "--format", "json", "--samples", "3")
    assert code == 0
    d = json.loads(out)
    assert d["q0"] == [0.0, -1.0]
    assert abs(d["samples"][-1]["y"] - math.sin(2)) < 1e-8


@pytest.mark.parametrize("argv", [
    ["solve", "--B", "3x", "--C", "1", "--interval", "0", "1"],
    ["solve", "--C", "1", "--interval", "0", "1"],
    ["solve", "--B", "1", "--C", "1", "--interval", "1", "0"],
    ["solve", "--B", "1", "--C", "1", "--interval", "0", "1", "--grid", "8"],
    ["solve", "--B", "1", "--C", "1", "--interval", "0", "1", "--x0", "5"],
    ["frobnicate"],
    ["verify", "--B", "1", "--C", "1", "--interval", "0", "1"],
])
def test_usage_errors(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 1 and err


def test_usage_error_json(capsys):
    code, _, err = call(capsys, "solve", "--B", "3x", "--C", "1", "--interval", "0", "1",
                        "--format=json")
    assert code == 1
    assert json.loads(err)["error"] == "UsageError"


def test_solve_json_report(capsys):
    code, out, _ = call(capsys, "solve", "--B", "2*x", "--C", "x^2+1", "--interval", "0", "2",
                        "--ic", "1", "0", "--format", "json", "--samples", "5")
    assert code == 0
    d = json.loads(out)
    assert d["schema"] == 1
    assert d["route"] == "discriminant-zero" and d["routes_attempted"] == ["discriminant-zero"]
    assert d["c"] == 1
    m = d["metrics"]
    assert len(m["factor_defects"]) == 3 and max(m["factor_defects"]) < 1e-6
    assert m["max_residual"] < 1e-6 and m["max_abs_error"] < 1e-6
    assert m["imag_residue"] >= 0
    assert [s["x"] for s in d["samples"]] == [0, 0.5, 1, 1.5, 2]
    assert abs(d["samples"][2]["y"] - math.exp(-0.5)) < 1e-9


def test_text_report_has_diagnostics(capsys):
    _, out, _ = call(capsys, "solve", "--B", "2*x", "--C", "x^2", "--interval", "0", "2",
                     "--ic", "1", "1")
    assert "route: discriminant-constant" in out and "k = D/4 = 1" in out
    assert "factor defects" in out


def test_determinism(capsys):
    argv = ["solve", "--B", "x", "--C", "1", "--R", "sin(x)", "--interval", "0", "1", "--ic",
            "1", "0"]
    for fmt in ("csv", "json"):
        _, first, _ = call(capsys, *argv, "--format", fmt)
        _, second, _ = call(capsys, *argv, "--format", fmt)
        assert first == second


def test_env_tolerance(capsys, monkeypatch):
    argv = ["solve", "--B", "x", "--C", "1", "--interval", "0", "1", "--ic", "1", "0",
            "--format", "json", "--samples", "2"]
    monkeypatch.setenv("IF2ODE_TOL", "grid=65")
    _, out, _ = call(capsys, *argv)
    assert json.loads(out)["metrics"]["grid_size"] == 65
    monkeypatch.setenv("IF2ODE_TOL", "grid=65")
    _, out, _ = call(capsys, *argv, "--grid", "129")
    assert json.loads(out)["metrics"]["grid_size"] == 129
    monkeypatch.setenv("IF2ODE_TOL", "nonsense=3")
    code, _, _ = call(capsys, *argv)
    assert code == 2


def test_output_file(capsys, tmp_path):
    target = tmp_path / "y.csv"
    code, out, _ = call(capsys, "solve", "--B", "3", "--C", "2", "--interval", "0", "2", "--ic",
                        "1", "-1", "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("x,y,yprime\n")


def test_verify_command(capsys):
    code, out, _ = call(capsys, "verify", "--B", "x", "--C", "1", "--interval", "0", "1",
                        "--ic", "1", "0")
    assert code == 0 and "verification: PASS" in out
    code, out, _ = call(capsys, "verify", "--B", "x", "--C", "1", "--interval", "0", "1",
                        "--ic", "1", "0", "--format", "json")
    assert json.loads(out)["passed"] is True


def test_basis_command(capsys):
    code, out, _ = call(capsys, "basis", "--B", "0", "--C", "1", "--interval", "0", "1",
                        "--samples", "3", "--format", "csv")
    assert code == 0
    rows = [r.split(",") for r in out.splitlines()]
    assert rows[0] == ["x", "y1", "y2"]
    assert abs(float(rows[2][1]) - math.cos(0.5)) < 1e-12
    assert abs(float(rows[2][2]) - math.sin(0.5)) < 1e-12


def test_complementary_via_cli(capsys):
    code, out, _ = call(capsys, "solve", "--B", "-2/x", "--C", "2/x^2", "--f", "x",
                        "--interval", "1", "3", "--ic", "1", "2", "--format", "json",
                        "--samples", "3")
    assert code == 0
    d = json.loads(out)
    assert d["route"] == "known-complementary"
    assert abs(d["samples"][1]["y"] - 4) < 1e-7


def test_invalid_complementary_exit(capsys):
    code, _, err = call(capsys, "solve", "--B", "-2/x", "--C", "2/x^2", "--f", "x^3",
                        "--interval", "1", "3")
    assert code == 2 and "InvalidComplementary" in err and "[classify]" in err

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from hypfracp import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_kernel_csv(capsys):
    code, out, _ = run(capsys, "kernel", "--n", "3", "--s", "0.5", "--p", "2", "--rho-grid", "0.01:10:5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["rho", "K", "log_slope"] and len(rows) == 5
    assert float(rows[0]["log_slope"]) == pytest.approx(-4.0, abs=0.01)
    # 17 significant digits
    assert len(rows[1]["K"].replace(".", "").lstrip("0").split("e")[0]) >= 16


def test_deterministic_output(capsys, tmp_path):
    args = ["poisson", "--n", "2", "--s", "0.4", "--p", "2.5", "--y", "0.3", "--rho-grid", "0.1:5:7"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert cli.main(args + ["--output", str(a)]) == 0
    assert cli.main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_usage_errors(capsys):
    assert run(capsys, "kernel", "--n", "3", "--s", "1.5", "--p", "2")[0] == 1
    assert run(capsys, "kernel", "--n", "1", "--s", "0.5", "--p", "2")[0] == 1
    assert run(capsys, "kernel", "--n", "3", "--s", "0.5", "--p", "1")[0] == 1
    assert run(capsys, "kernel", "--n", "3", "--s", "0.5")[0] == 1
    assert run(capsys, "heat", "--n", "3", "--t", "-1")[0] == 1
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "kernel", "--n", "3", "--s", "0.5", "--p", "2", "--rho-grid", "1:2")[0] == 1
    assert run(capsys, "op", "--n", "3", "--s", "0.5", "--p", "1.2", "--r0", "0")[0] == 1


def test_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise ArithmeticError("precision lost")

    monkeypatch.setattr(cli, "log_kernel_K", boom)
    code, _, err = run(capsys, "kernel", "--n", "3", "--s", "0.5", "--p", "2", "--rho", "1")
    assert code == 2 and "numerical failure" in err


def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# heat table\nn = 3\nt = 0.5\nrho_grid = 0:2:3\nformat = json\n")
    code, out, _ = run(capsys, "heat", "--config", str(cfg))
    assert code == 0
    data = json.loads(out)
    assert data["n"] == 3 and len(data["rows"]) == 3
    code, out, _ = run(capsys, "heat", "--config", str(cfg), "--n", "5", "--format", "csv")
    assert code == 0 and out.startswith("rho,p")
    cfg.write_text("bogus_key = 1\n")
    assert run(capsys, "heat", "--config", str(cfg))[0] == 1


def test_op_json_has_diagnostics(capsys):
    code, out, _ = run(capsys, "op", "--n", "3", "--s", "0.5", "--p", "2", "--u", "u1",
                       "--representation", "singular", "--format", "json", "--quad", "nodes=20")
    assert code == 0
    data = json.loads(out)
    assert data["records"][0]["representation"] == "singular"
    assert "far_tail" in data["records"][0]["diagnostics"]


def test_converge_csv_schema(capsys, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    code, out, _ = run(capsys, "converge", "--n", "3", "--p", "2", "--u", "u2",
                       "--s-grid", "0.9,0.95,0.975,0.99")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["s", "value_fractional", "value_classical", "gap", "err"]
    assert [float(r["s"]) for r in rows] == [0.9, 0.95, 0.975, 0.99]
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert run(capsys, "converge", "--n", "3", "--p", "2")[0] == 1


def test_converge_moment_limit(capsys):
    code, out, _ = run(capsys, "converge", "--n", "2", "--p", "2", "--quantity", "moment", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["limit"]["limit"] == pytest.approx(data["limit"]["target"], rel=0.01)


def test_verify_exit_codes(capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--only", "6")
    assert code == 0 and "[PASS]" in out
    # criterion 5 fails on the tail flatness clause, so verify reports failure
    code, out, _ = run(capsys, "verify", "--quick", "--only", "5")
    assert code == 3 and "[FAIL]" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hypfracp", "heat", "--n", "1", "--t", "1", "--rho", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    rho, val = res.stdout.splitlines()[1].split(",")
    assert float(rho) == 0.0
    assert float(val) == pytest.approx(1.0 / (4.0 * math.pi) ** 0.5, rel=1e-12)

import subprocess
import sys

import numpy as np
import pytest

from iterproj import cli
from iterproj import io as outio


def run(*args):
    return cli.main(list(args))


def test_run_problem1_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "r"
    assert run("run", "--out", str(out), "--set", "N=2", "--set", "T_final=0.003",
               "--set", "accelerate=true", "--set", "iter_max=300") == 0
    for name in ("diagnostics.csv", "iterations.csv", "summary.csv", "final.vtk", "config.toml",
                 "final.ckpt"):
        assert (out / name).exists()
    kind, _, cols, rows = outio.read_csv(out / "summary.csv")
    assert kind == "summary" and "err_u_H1" in cols and "err_p_L2" in cols
    _, _, cols, rows = outio.read_csv(out / "iterations.csv")
    assert cols == list(outio.ITERATION_COLUMNS) and rows
    assert "err_u_H1" in capsys.readouterr().out


def test_run_cavity_has_no_error_columns(tmp_path):
    out = tmp_path / "c"
    assert run("run", "--out", str(out), "--set", "problem=cavity", "--set", "Re=100",
               "--set", "N=2", "--set", "k=0.01", "--set", "T_final=0.03") == 0
    _, _, cols, _ = outio.read_csv(out / "diagnostics.csv")
    assert not any(c.startswith("err_") for c in cols)
    text = (out / "final.vtk").read_text()
    assert "VECTORS velocity" in text and "SCALARS pressure" in text


def test_serial_rerun_is_bitwise_identical(tmp_path):
    args = ["--set", "N=2", "--set", "T_final=0.004", "--serial"]
    assert run("run", "--out", str(tmp_path / "a"), *args) == 0
    assert run("run", "--out", str(tmp_path / "b"), *args) == 0
    for name in ("diagnostics.csv", "iterations.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file_and_errors(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("N = 0\n")
    assert run("run", "--config", str(cfg), "--out", str(tmp_path)) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert run("run", "--set", "novalue") == cli.EXIT_CONFIG
    assert run("study", "--mode", "order", "--set", "meshes=4",
               "--out", str(tmp_path)) == cli.EXIT_CONFIG
    assert run("spectrum", "--set", "N=20", "--out", str(tmp_path)) == cli.EXIT_CONFIG


def test_solver_failure_exit(tmp_path, monkeypatch):
    from iterproj.projector import InnerSolverError

    def boom(*a, **k):
        raise InnerSolverError("momentum solve failed at iteration 3")
    monkeypatch.setattr(cli, "execute_run", boom)
    assert run("run", "--out", str(tmp_path)) == cli.EXIT_SOLVER


def test_order_study_and_rate_assertion(tmp_path):
    out = tmp_path / "o"
    common = ["--out", str(out), "--set", "meshes=2 3", "--set", "T_final=0.002",
              "--set", "accelerate=true", "--set", "iter_max=500", "--set", "eps=1e-5"]
    assert run("study", "--mode", "order", *common) == 0
    kind, _, cols, rows = outio.read_csv(out / "order.csv")
    assert kind == "order" and "rate_u_H1" in cols and len(rows) == 2
    assert run("study", "--mode", "order", "--min-rate", "50", *common) == cli.EXIT_ASSERT


def test_sweep_study(tmp_path):
    out = tmp_path / "s"
    assert run("study", "--mode", "sweep", "--out", str(out), "--set", "N=2",
               "--set", "T_final=0.003", "--set", "alphas=1.5 2.5", "--set", "rho_over_nus=1 2",
               "--set", "accelerate=true", "--set", "iter_max=300", "--set", "eps=1e-4",
               "--jobs", "2") == 0
    _, _, cols, rows = outio.read_csv(out / "sweep.csv")
    assert len(rows) == 4 and "avg_iterations" in cols


def test_modes_table(tmp_path, capsys):
    out = tmp_path / "m"
    assert run("modes", "--out", str(out), "--alphas", "0 1.5", "--rho-over-nus", "1 2.5") == 0
    _, _, cols, rows = outio.read_csv(out / "modes.csv")
    idx = {c: i for i, c in enumerate(cols)}
    rot = [r for r in rows if float(r[idx["alpha"]]) == 1.5 and float(r[idx["rho_over_nu"]]) == 1.0]
    assert rot and all(float(r[idx["C"]]) == 0.0 for r in rot)
    assert all(float(r[idx["C_uzawa"]]) == pytest.approx(1.0, abs=2e-3) for r in rows
               if float(r[idx["z"]]) == 1e-3)
    assert "non-convergent: alpha=0 rho/nu=2.5" in capsys.readouterr().out


def test_spectrum_command(tmp_path):
    out = tmp_path / "sp"
    assert run("spectrum", "--out", str(out), "--set", "N=2") == 0
    _, _, cols, rows = outio.read_csv(out / "spectrum.csv")
    row = dict(zip(cols, rows[0]))
    assert float(row["lam_max"]) <= 1 + 1e-10 and row["all_positive"] == "1"
    assert 0.95 <= float(row["rate_ratio"]) <= 1.05
    assert run("spectrum", "--out", str(out), "--set", "N=2", "--set", "alpha=3.0",
               "--set", "rho_over_nu=2", "--no-measure") == 0
    _, _, cols, rows = outio.read_csv(out / "spectrum.csv")
    row = dict(zip(cols, rows[0]))
    assert float(row["bound"]) == 2.0 and row["convergence"] == "not guaranteed"


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "iterproj.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "spectrum" in res.stdout

import csv
import io

import pytest

from hermite_cosim import cli


def read_rows(path):
    with open(path) as fh:
        meta = fh.readline()
        return meta, list(csv.DictReader(fh))


def test_run_writes_files(tmp_path, capsys):
    code = cli.main(["run", "--dd", "4", "--dt-ref", "0.5", "--out-dir", str(tmp_path)])
    assert code == 0
    summary = capsys.readouterr().out
    assert summary.startswith("completed error=")
    err = float(summary.split("error=")[1].split()[0])
    assert err < 0.01
    meta, rows = read_rows(tmp_path / "trajectory.csv")
    assert meta.startswith("# command=run config_hash=")
    assert list(rows[0]) == ["t", "v_L", "x_L", "x_D", "u_v_C", "u_x_C", "u_f_C",
                             "y_f_C", "y_v_C", "y_x_C"]
    assert float(rows[-1]["t"]) == 10.0
    _, steps = read_rows(tmp_path / "steps.csv")
    assert list(steps[0]) == ["N", "t_N", "dt", "iterations", "residual_evals", "outcome"]


def test_run_abort_exit_code(tmp_path, capsys):
    code = cli.main(["run", "--dd", "0.64", "--method", "fixed-point", "--out-dir", str(tmp_path)])
    assert code == 1
    assert "diverged" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["run", "--method", "bogus"], ["run", "--dd", "-1"],
                                  ["run", "--opt", "newton.nope=1"], ["run", "--dt-ref", "x"],
                                  ["sweep-dt", "--dt-ref", "0.1"], ["frobnicate"]])
def test_config_errors_exit_2(argv, tmp_path):
    try:
        code = cli.main(argv + ["--out-dir", str(tmp_path)] if argv[0] != "frobnicate" else argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_list_methods(capsys):
    assert cli.main(["list-methods"]) == 0
    assert capsys.readouterr().out.split() == ["fixed-point", "newtonls", "anderson",
                                               "ngmres", "ngmres-ls"]


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("# experiment\nmodel.D_D = 0.25\nsolver.method = anderson\n"
                    "solver.anderson.m = 7\nrun.dt_ref = 0.2\nrun.eps = 1e-5\n")
    args = cli.make_parser().parse_args(["run", "--config", str(conf), "--dt-ref", "0.5"])
    cfg = cli.build_config(args)
    assert cfg.model_overrides["D_D"] == 0.25
    assert cfg.method == "anderson"
    assert cfg.solver().anderson.m == 7
    assert cfg.dt_ref == 0.5
    assert cfg.eps_abs == cfg.eps_rel == 1e-5


def test_bad_config_file(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("dt_ref = 0.1\n")
    assert cli.main(["run", "--config", str(conf)]) == 2


def test_sweep_rho_defaults():
    cfg = cli.build_config(cli.make_parser().parse_args(["sweep-rho"]))
    assert cfg.dt_ref == 1e-2 and cfg.eps_abs == 1e-4
    assert cfg.dd_list == (4.0, 2.5, 1.5625, 1.0, 0.64, 0.25, 0.04, 0.01)


def test_sweep_dt_rows_and_determinism(tmp_path):
    argv = ["sweep-dt", "--dd", "4", "--dt-ref", "1,0.5", "--method", "newtonls,fixed-point"]
    assert cli.main(argv + ["--out-dir", str(tmp_path / "a")]) == 0
    assert cli.main(argv + ["--out-dir", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a = (tmp_path / "a" / "sweep_dt.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep_dt.csv").read_bytes()
    _, rows = read_rows(tmp_path / "a" / "sweep_dt.csv")
    assert [(r["method"], r["dt_ref"]) for r in rows] == [
        ("newtonls", "1.0"), ("newtonls", "0.5"), ("fixed-point", "1.0"), ("fixed-point", "0.5")]
    assert list(rows[0]) == ["method", "dt_ref", "error", "total_iterations",
                             "total_integrations", "outcome"]
    assert all(r["outcome"] == "converged" for r in rows)


def test_sweep_rho_marks_failures(tmp_path):
    argv = ["sweep-rho", "--dd", "4,0.64", "--method", "fixed-point,newtonls",
            "--dt-ref", "0.5", "--out-dir", str(tmp_path)]
    assert cli.main(argv) == 0
    _, rows = read_rows(tmp_path / "sweep_rho.csv")
    assert list(rows[0]) == ["D_D", "rho", "method", "total_iterations", "total_integrations",
                             "error", "outcome"]
    outcome = {(r["D_D"], r["method"]): r["outcome"] for r in rows}
    assert outcome[("0.64", "fixed-point")] == "diverged"
    assert outcome[("0.64", "newtonls")] == "converged"
    assert outcome[("4.0", "fixed-point")] == "converged"
    assert float(rows[-1]["rho"]) == pytest.approx(1.25)
    assert rows[-1]["error"] != ""

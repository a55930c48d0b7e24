import numpy as np
import pytest

from lagmc import io as lio
from lagmc.cli import main
from lagmc.grid import GridFunction, GridSpec

from conftest import quad

QUAD_CFG = """
grid.n = 2
grid.m = 11
grid.h = 0.1
phase.variant = constant
phase.c = 1.5707963267948966
solve.exact = quadratic
solve.q = 1,1
solve.tol = 1e-12
"""


@pytest.fixture
def quad_cfg(tmp_path):
    path = tmp_path / "quad.cfg"
    path.write_text(QUAD_CFG)
    return path


def test_solve_quadratic(tmp_path, quad_cfg):
    out = tmp_path / "sol.csv"
    assert main(["solve", "--config", str(quad_cfg), "--out", str(out)]) == 0
    u = lio.read_grid(out)
    x = u.spec.coords()
    assert np.abs(u.values - 0.5 * np.sum(x**2, -1)).max() <= 1e-6
    rep = lio.parse_report(out.read_text())
    assert rep["converged"] == "1" and float(rep["max_error"]) <= 1e-6


def test_solve_nonconvergence_exit_3(tmp_path, quad_cfg, capsys):
    out = tmp_path / "sol.csv"
    assert main(["solve", "--config", str(quad_cfg), "--solve.max_iters", "3", "--out", str(out)]) == 3
    assert out.exists()
    assert "not converged" in capsys.readouterr().err


def test_solve_with_boundary_file(tmp_path, quad_cfg):
    g = GridSpec.centered(1, 0.5, 0.05)
    b = GridFunction.from_callable(g, lambda x: x[..., 0] ** 2)
    lio.write_grid(tmp_path / "b.csv", b)
    out = tmp_path / "s.csv"
    code = main(["solve", "--solve.boundary", str(tmp_path / "b.csv"), "--phase.c", str(np.arctan(2.0)),
                 "--grid.n", "1", "--solve.tol", "1e-11", "--out", str(out)])
    assert code == 0
    assert np.abs(lio.read_grid(out).values - b.values).max() <= 1e-6


def test_validation_exit_1(tmp_path, quad_cfg, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["solve", "--config", str(quad_cfg), "--solve.dt", "1", "--out", out]) == 1
    assert main(["solve", "--config", str(tmp_path / "nope.cfg"), "--out", out]) == 1
    assert main(["solve", "--solve.boundary", str(tmp_path / "nope.csv"), "--out", out]) == 1
    with pytest.raises(SystemExit) as e:
        main(["solve", "--solve.bogus", "1", "--out", out])
    assert e.value.code == 1
    err = capsys.readouterr().err
    assert "error" in err


def test_profile_command(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["profile", "--n", "1", "--a", "-1", "--out", str(out)]) == 0
    names, data = lio.read_table(out)
    row = data[data[:, 0] == 0][0]
    assert row[names.index("fpp")] == pytest.approx(-4 / 3, abs=1e-10)


def test_profile_branch_exit_2(tmp_path, capsys):
    assert main(["profile", "--n", "1", "--a", "-1", "--smax", "5", "--out", str(tmp_path / "p.csv")]) == 2
    assert "principal branch" in capsys.readouterr().err


def test_rotate_nonconvex_exit_1(tmp_path, capsys):
    g = GridSpec.centered(2, 0.5, 0.05)
    lio.write_grid(tmp_path / "nc.csv", GridFunction.from_callable(g, lambda x: x[..., 0] ** 2 - x[..., 1] ** 2))
    assert main(["rotate", "--in", str(tmp_path / "nc.csv"), "--out", str(tmp_path / "r.csv")]) == 1
    assert "at node (1, 1)" in capsys.readouterr().err


def test_rotate_inverse_round_trip(tmp_path):
    g = GridSpec.centered(2, 0.4, 0.02)
    fn = lambda x: quad([[1.0, 0.2], [0.2, 0.8]])(x) + 0.1 * x[..., 0] ** 4
    lio.write_grid(tmp_path / "u.csv", GridFunction.from_callable(g, fn))
    assert main(["rotate", "--in", str(tmp_path / "u.csv"), "--out", str(tmp_path / "r.csv")]) == 0
    assert main(["inverse-rotate", "--in", str(tmp_path / "r.csv"), "--inverse.primal_h", "0.02",
                 "--out", str(tmp_path / "b.csv")]) == 0
    back = lio.read_grid(tmp_path / "b.csv")
    assert np.abs(back.values - fn(back.spec.coords())).max() <= g.h


@pytest.mark.parametrize("mode", ["holder", "vmo", "rank"])
def test_diagnose_modes(tmp_path, mode):
    g = GridSpec.centered(2, 1.0, 0.02)
    lio.write_grid(tmp_path / "u.csv", GridFunction.from_callable(g, quad(np.eye(2))))
    out = tmp_path / "d.csv"
    assert main(["diagnose", "--in", str(tmp_path / "u.csv"), "--mode", mode, "--out", str(out)]) == 0
    rep = lio.parse_report(out.read_text())
    assert rep["mode"] == mode
    if mode == "holder":
        assert float(rep["exponent"]) == pytest.approx(2.0, abs=0.02)
    if mode == "rank":
        assert rep["constant"] == "1"


def test_diagnose_dual(tmp_path):
    g = GridSpec.centered(1, 1.0, 1e-4)
    lio.write_grid(tmp_path / "u.csv", GridFunction.from_callable(g, lambda x: np.abs(x[..., 0]) ** 1.8 / 1.8))
    out = tmp_path / "d.csv"
    code = main(["diagnose", "--in", str(tmp_path / "u.csv"), "--mode", "dual", "--diagnose.alpha", "0.5",
                 "--diagnose.beta", "0.8", "--diagnose.dual_h", "0.01", "--out", str(out)])
    assert code == 0
    rep = lio.parse_report(out.read_text())
    assert rep["consistent"] == "1" and "no contradiction" in rep["verdict"]


def test_singular_command(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["singular", "--n", "2", "--a", "-0.5", "--singular.radius", "0.34", "--singular.h", "0.01",
                 "--singular.primal_h", "2e-5", "--singular.output", "U", "--out", str(out)])
    assert code == 0
    rep = lio.parse_report(out.read_text())
    assert float(rep["holder_exponent"]) == pytest.approx(4 / 3, abs=0.02)


@pytest.mark.parametrize("suite", ["duality", "rotation", "profile", "solver", "diagnostics"])
def test_verify_suites(suite, capsys):
    assert main(["verify", suite]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_determinism(tmp_path, quad_cfg):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["solve", "--config", str(quad_cfg), "--run.seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    g = GridSpec.centered(2, 0.3, 0.02)
    lio.write_grid(tmp_path / "u.csv", GridFunction.from_callable(g, quad(np.eye(2) * 2)))
    for path in (a, b):
        assert main(["rotate", "--in", str(tmp_path / "u.csv"), "--run.threads", "2", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "lagmc", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "inverse-rotate" in r.stdout

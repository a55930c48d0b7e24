import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lagmc import io as lio
from lagmc.config import ConfigError, RunConfig, all_keys, exact_solution, load_config, parse_config
from lagmc.convex import lewy_yuan_rotate
from lagmc.grid import GridFunction, GridSpec
from lagmc.phase import Variant
from lagmc.profiles import rotator_profile

from conftest import quad, sample


@given(arrays(np.float64, (7, 7), elements=st.floats(-1e6, 1e6)))
def test_grid_round_trip_exact(vals):
    u = GridFunction(GridSpec(2, (-0.3, 0.1), 0.05, 7), vals)
    back = lio.loads_grid(lio.dumps_grid(u, {"k": 1.5}))
    assert back.spec == u.spec
    assert np.array_equal(back.values, u.values)


def test_grid_report_and_errors(tmp_path):
    u = sample(1, 1.0, 0.25, quad([[1.0]]))
    path = tmp_path / "u.csv"
    lio.write_grid(path, u, {"iterations": 3, "residual": 0.25, "point": [0.0, 1.0]})
    rep = lio.parse_report(path.read_text())
    assert rep == {"iterations": "3", "residual": "0.25", "point": "0,1"}
    with pytest.raises(lio.FormatError):
        lio.loads_grid("1,2\n")
    text = path.read_text().replace("-1,", "-0.9,", 1)
    with pytest.raises(lio.FormatError, match="coordinates"):
        lio.loads_grid(text)
    with pytest.raises(lio.FormatError):
        lio.loads_grid(lio.grid_header(u.spec) + "0,1\n")


def test_rotated_round_trip(tmp_path):
    u = sample(2, 0.3, 0.05, quad([[1.0, 0.2], [0.2, 2.0]]))
    r = lewy_yuan_rotate(u)
    path = tmp_path / "r.csv"
    lio.write_rotated(path, r, {"shrink": 0.8})
    pts, vals, grid = lio.read_rotated(path)
    assert np.array_equal(pts, r.points) and np.array_equal(vals, r.values)
    assert np.array_equal(grid.values, r.grid.values)
    assert np.array_equal(lio.read_potential(path).values, r.grid.values)


def test_profile_and_table(tmp_path):
    p = rotator_profile(1, -1.0, steps=50)
    path = tmp_path / "p.csv"
    lio.write_profile(path, p, {"extra": 1})
    names, data = lio.read_table(path)
    assert names == list(lio.PROFILE_COLUMNS)
    assert np.array_equal(data[:, 3], p.fpp)
    assert lio.parse_report(path.read_text())["n"] == "1"
    lio.write_table(tmp_path / "t.csv", ["a", "b"], [[1, 2], [3, 4]], {"mode": "x"})
    names, data = lio.read_table(tmp_path / "t.csv")
    assert names == ["a", "b"] and data.tolist() == [[1, 2], [3, 4]]


def test_phase_table(tmp_path):
    ax = np.linspace(-1, 1, 3)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
    rows = np.column_stack([X, X[:, 0] + 2 * X[:, 1]])
    np.savetxt(tmp_path / "ph.csv", rows, delimiter=",")
    axes, table = lio.read_phase_table(tmp_path / "ph.csv", 1)
    assert table[2, 0] == 1 - 2
    np.savetxt(tmp_path / "bad.csv", rows[:-1], delimiter=",")
    with pytest.raises(lio.FormatError):
        lio.read_phase_table(tmp_path / "bad.csv", 1)


def test_config_parse_and_reject():
    cfg = parse_config("""
# comment
grid.n = 1
grid.h = 0.05   # trailing comment
phase.variant = rotator
phase.a = -1
solve.dt = auto
diagnose.radii = 0.1, 0.2
""")
    assert cfg.grid.n == 1 and cfg.grid.h == 0.05
    assert cfg.phase.spec(1).variant is Variant.ROTATOR
    assert cfg.solve.dt is None and cfg.diagnose.radii == [0.1, 0.2]
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config("grid.bogus = 1")
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config("nosection.n = 1")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("grid.m = many")
    with pytest.raises(ConfigError):
        parse_config("grid.m 3")
    with pytest.raises(ConfigError, match="unknown phase variant"):
        parse_config("phase.variant = wobbly").phase.spec(2)


def test_config_files_checked(tmp_path):
    cfg = parse_config(f"solve.boundary = {tmp_path / 'missing.csv'}")
    with pytest.raises(ConfigError, match="missing file"):
        cfg.check_files()
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.cfg")


def test_grid_section_spec():
    cfg = RunConfig()
    cfg.set("grid.n", "2")
    cfg.set("grid.m", "5")
    cfg.set("grid.h", "0.5")
    assert cfg.grid.spec() == GridSpec(2, (-1.0, -1.0), 0.5, 5)
    cfg.set("grid.lo", "0")
    assert cfg.grid.spec().lo == (0.0, 0.0)


def test_exact_solutions():
    cfg = parse_config("solve.exact = quadratic\nsolve.q = 1,0,0,3")
    g = GridSpec.centered(2, 1.0, 0.5)
    x = g.coords()
    assert np.allclose(exact_solution(cfg, g), 0.5 * (x[..., 0] ** 2 + 3 * x[..., 1] ** 2))
    cfg = parse_config("solve.exact = power\nsolve.power = 1.5")
    assert np.allclose(exact_solution(cfg, g), np.linalg.norm(x, axis=-1) ** 1.5 / 1.5)
    with pytest.raises(ConfigError):
        exact_solution(parse_config("solve.exact = power\nsolve.power = 1"), g)
    with pytest.raises(ConfigError):
        exact_solution(parse_config("solve.exact = quadratic\nsolve.q = 1,2,3"), g)


def test_all_keys_cover_sections():
    keys = all_keys()
    assert "solve.dt" in keys and "run.threads" in keys and "diagnose.mode" in keys
    assert len(keys) == len(set(keys))

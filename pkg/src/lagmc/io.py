"""Plain-text CSV formats for grid functions, rotated potentials and profiles.

Every format is line oriented: ``#`` lines carry metadata, other lines are
comma separated numbers written with 17 significant digits so that a
write/read round trip is exact.
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Mapping, Optional, TextIO, Union

import numpy as np

from .convex import RotatedPotential
from .grid import GridFunction, GridSpec
from .profiles import ProfileSolution

PathLike = Union[str, Path]


class FormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return "%.17g" % x


def format_report(report: Mapping[str, object]) -> str:
    """``# key=value`` comment lines, in insertion order."""
    lines = []
    for k, v in report.items():
        if isinstance(v, (list, tuple, np.ndarray)):
            v = ",".join(_fmt(float(t)) for t in np.ravel(v))
        elif isinstance(v, (float, np.floating)):
            v = _fmt(float(v))
        lines.append(f"# {k}={v}\n")
    return "".join(lines)


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.startswith("# ") and "=" in line and not line.startswith(("# grid ", "# rotated ")):
            k, v = line[2:].split("=", 1)
            out[k.strip()] = v.strip()
    return out


# ------------------------------------------------------------ grid functions

def grid_header(spec: GridSpec) -> str:
    lo = ",".join(_fmt(v) for v in spec.lo)
    return f"# grid n={spec.n} m={spec.m} h={_fmt(spec.h)} lo={lo}\n"


def _grid_rows(u: GridFunction) -> str:
    X = u.spec.coords().reshape(-1, u.spec.n)
    data = np.column_stack([X, u.values.ravel()])
    buf = io.StringIO()
    np.savetxt(buf, data, fmt="%.17g", delimiter=",")
    return buf.getvalue()


def dumps_grid(u: GridFunction, report: Optional[Mapping[str, object]] = None) -> str:
    return grid_header(u.spec) + _grid_rows(u) + (format_report(report) if report else "")


def _parse_grid_header(line: str) -> GridSpec:
    parts = line[1:].split()
    if not parts or parts[0] != "grid":
        raise FormatError(f"expected '# grid ...' header, got {line.strip()!r}")
    kv = dict(p.split("=", 1) for p in parts[1:])
    try:
        n, m, h = int(kv["n"]), int(kv["m"]), float(kv["h"])
        lo = tuple(float(t) for t in kv["lo"].split(","))
    except (KeyError, ValueError) as err:
        raise FormatError(f"malformed grid header: {line.strip()!r}") from err
    if len(lo) != n:
        raise FormatError("grid header lo has wrong length")
    return GridSpec(n, lo, h, m)


def _read_grid_block(lines: list[str], start: int) -> tuple[GridFunction, int]:
    spec = _parse_grid_header(lines[start])
    rows = []
    i = start + 1
    while i < len(lines) and len(rows) < spec.size:
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        rows.append([float(t) for t in line.split(",")])
    data = np.asarray(rows, float)
    if data.shape != (spec.size, spec.n + 1):
        raise FormatError(f"grid block expects {spec.size} rows of {spec.n + 1} values, got {data.shape}")
    X = spec.coords().reshape(-1, spec.n)
    if not np.allclose(data[:, :-1], X, rtol=0, atol=1e-9 * max(1.0, float(np.abs(X).max()))):
        raise FormatError("grid coordinates do not match the header")
    return GridFunction(spec, data[:, -1]), i


def loads_grid(text: str) -> GridFunction:
    lines = text.splitlines()
    k = next((i for i, l in enumerate(lines) if l.startswith("# grid ")), None)
    if k is None:
        raise FormatError("no grid header found")
    return _read_grid_block(lines, k)[0]


def write_grid(path: PathLike, u: GridFunction, report: Optional[Mapping[str, object]] = None) -> None:
    Path(path).write_text(dumps_grid(u, report))


def read_grid(path: PathLike) -> GridFunction:
    return loads_grid(Path(path).read_text())


# ------------------------------------------------------------ rotated potentials

def dumps_rotated(r: RotatedPotential, report: Optional[Mapping[str, object]] = None) -> str:
    buf = io.StringIO()
    buf.write(f"# rotated n={r.n}\n")
    np.savetxt(buf, np.column_stack([r.points, r.values]), fmt="%.17g", delimiter=",")
    buf.write(dumps_grid(r.grid, report))
    return buf.getvalue()


def loads_rotated(text: str) -> tuple[np.ndarray, np.ndarray, GridFunction]:
    """Scattered points, scattered values and the resampled grid function."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# rotated "):
        raise FormatError("expected '# rotated n=<n>' header")
    try:
        n = int(lines[0].split("n=", 1)[1])
    except (IndexError, ValueError) as err:
        raise FormatError("malformed rotated header") from err
    k = next((i for i, l in enumerate(lines) if l.startswith("# grid ")), None)
    if k is None:
        raise FormatError("rotated file lacks a grid block")
    rows = [[float(t) for t in l.split(",")] for l in lines[1:k] if l.strip() and not l.startswith("#")]
    data = np.asarray(rows, float).reshape(-1, n + 1)
    grid, _ = _read_grid_block(lines, k)
    if grid.spec.n != n:
        raise FormatError("grid block dimension differs from rotated header")
    return data[:, :n], data[:, n], grid


def write_rotated(path: PathLike, r: RotatedPotential, report: Optional[Mapping[str, object]] = None) -> None:
    Path(path).write_text(dumps_rotated(r, report))


def read_rotated(path: PathLike):
    return loads_rotated(Path(path).read_text())


def read_potential(path: PathLike) -> GridFunction:
    """Grid function from either a plain grid file or the resample block of a rotated file."""
    text = Path(path).read_text()
    if text.startswith("# rotated "):
        return loads_rotated(text)[2]
    return loads_grid(text)


# ------------------------------------------------------------ profiles

PROFILE_COLUMNS = ("s", "f", "fp", "fpp")


def dumps_profile(p: ProfileSolution, report: Optional[Mapping[str, object]] = None) -> str:
    buf = io.StringIO()
    buf.write(",".join(PROFILE_COLUMNS) + "\n")
    np.savetxt(buf, np.column_stack([p.s, p.f, p.fp, p.fpp]), fmt="%.17g", delimiter=",")
    base = {"n": p.n, "a": p.a, "s0": p.s0}
    base.update(report or {})
    buf.write(format_report(base))
    return buf.getvalue()


def write_profile(path: PathLike, p: ProfileSolution, report: Optional[Mapping[str, object]] = None) -> None:
    Path(path).write_text(dumps_profile(p, report))


def read_table(path: PathLike) -> tuple[list[str], np.ndarray]:
    """Header names and numeric rows of a CSV with a single header line and ``#`` comments."""
    lines = [l for l in Path(path).read_text().splitlines() if l.strip() and not l.startswith("#")]
    if not lines:
        raise FormatError("empty table")
    names = [t.strip() for t in lines[0].split(",")]
    data = np.asarray([[float(t) for t in l.split(",")] for l in lines[1:]], float)
    return names, data.reshape(-1, len(names))


def write_table(path: PathLike, names: Iterable[str], rows, report: Optional[Mapping[str, object]] = None) -> None:
    names = list(names)
    buf = io.StringIO()
    if report:
        buf.write(format_report(report))
    buf.write(",".join(names) + "\n")
    rows = np.asarray(rows, float).reshape(-1, len(names))
    if len(rows):
        np.savetxt(buf, rows, fmt="%.17g", delimiter=",")
    Path(path).write_text(buf.getvalue())


def read_phase_table(path: PathLike, n: int):
    """Tabulated phase from rows ``x1..xn,p1..pn,psi`` covering a full tensor grid."""
    rows = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if rows.shape[1] != 2 * n + 1:
        raise FormatError(f"phase table needs {2 * n + 1} columns")
    axes = [np.unique(rows[:, j]) for j in range(2 * n)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(rows):
        raise FormatError("phase table rows do not form a tensor grid")
    idx = tuple(np.searchsorted(a, rows[:, j]) for j, a in enumerate(axes))
    table = np.full(shape, np.nan)
    table[idx] = rows[:, -1]
    if np.any(np.isnan(table)):
        raise FormatError("phase table has duplicate or missing nodes")
    return axes, table

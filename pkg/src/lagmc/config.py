"""Key-value run configuration: ``section.key = value`` lines, ``#`` comments.

Each section is a dataclass; the field annotation decides how the text
value is parsed. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, get_type_hints

import numpy as np

from .grid import GridSpec
from .phase import PhaseSpec, Variant
from .solver import SolveParams


class ConfigError(ValueError):
    pass


Floats = list  # comma separated reals


@dataclass
class GridSection:
    n: int = 2
    m: int = 21
    h: float = 0.1
    lo: Optional[Floats] = None  # centred on the origin when omitted

    def spec(self) -> GridSpec:
        lo = self.lo if self.lo is not None else [-(self.m - 1) * self.h / 2] * self.n
        if len(lo) == 1:
            lo = lo * self.n
        return GridSpec(self.n, tuple(lo), self.h, self.m)


@dataclass
class PhaseSection:
    variant: str = "constant"
    c: float = 0.0
    b: float = 0.0
    a: float = 0.0
    k: Optional[Floats] = None
    l: Optional[Floats] = None
    beta: float = 0.5
    table: Optional[Path] = None  # rows x1..xn,p1..pn,psi

    def spec(self, n: int) -> PhaseSpec:
        try:
            v = Variant(self.variant)
        except ValueError as err:
            raise ConfigError(f"unknown phase variant {self.variant!r}") from err
        if v is Variant.TABULATED:
            from .io import read_phase_table

            if self.table is None:
                raise ConfigError("tabulated phase needs phase.table")
            axes, table = read_phase_table(self.table, n)
            return PhaseSpec.tabulated(n, axes, table)
        return PhaseSpec(v, n, c=self.c, b=self.b, k=tuple(self.k or ()), l=tuple(self.l or ()),
                         a=self.a, beta=self.beta)


@dataclass
class SolveSection:
    dt: Optional[float] = None
    max_iters: int = 200_000
    tol: float = 1e-10
    stencil: str = "central"
    directions: Optional[str] = None   # "1,0;0,1;1,1;1,-1"
    boundary: Optional[Path] = None    # grid file supplying the Dirichlet data
    exact: Optional[str] = None        # "quadratic" or "power" when no boundary file is given
    q: Optional[Floats] = None         # diagonal (n values) or full matrix (n*n) for exact=quadratic
    power: float = 2.0                 # gamma in |x|^gamma/gamma for exact=power
    init: str = "zero"                 # interior start: zero or data

    def params(self) -> SolveParams:
        dirs = None
        if self.directions:
            dirs = [tuple(int(c) for c in d.split(",")) for d in self.directions.split(";")]
        return SolveParams(dt=self.dt, max_iters=self.max_iters, tol=self.tol, stencil=self.stencil,
                           directions=dirs)


@dataclass
class RotateSection:
    dual_h: Optional[float] = None
    shrink: float = 0.8


@dataclass
class InverseSection:
    primal_h: Optional[float] = None
    shrink: float = 1.0
    min_eig: Optional[float] = None


@dataclass
class ProfileSection:
    n: int = 1
    a: float = -1.0
    smax: float = 0.125
    steps: int = 2000
    s0: float = 1e-3


@dataclass
class SingularSection:
    radius: float = 0.3
    h: float = 0.01
    primal_h: Optional[float] = None
    output: str = "u"  # u, U or ubar


@dataclass
class DiagnoseSection:
    mode: str = "holder"
    point: Optional[Floats] = None
    radii: Optional[Floats] = None
    eig_tol: Optional[float] = None
    alpha: float = 0.5
    beta: float = 0.5
    dual_h: Optional[float] = None


@dataclass
class RunSection:
    threads: int = 1
    seed: int = 0


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    phase: PhaseSection = field(default_factory=PhaseSection)
    solve: SolveSection = field(default_factory=SolveSection)
    rotate: RotateSection = field(default_factory=RotateSection)
    inverse: InverseSection = field(default_factory=InverseSection)
    profile: ProfileSection = field(default_factory=ProfileSection)
    singular: SingularSection = field(default_factory=SingularSection)
    diagnose: DiagnoseSection = field(default_factory=DiagnoseSection)
    run: RunSection = field(default_factory=RunSection)

    def set(self, key: str, text: str) -> None:
        section, _, name = key.partition(".")
        if not name or section not in SECTIONS:
            raise ConfigError(f"unknown config key {key!r}")
        obj = getattr(self, section)
        hints = get_type_hints(type(obj))
        if name not in hints:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(obj, name, _parse(hints[name], text))
        except ValueError as err:
            raise ConfigError(f"bad value for {key}: {text!r}") from err

    def check_files(self) -> None:
        for key in all_keys():
            section, name = key.split(".")
            v = getattr(getattr(self, section), name)
            if isinstance(v, Path) and not v.exists():
                raise ConfigError(f"{key} refers to missing file {v}")


SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse(tp, text: str):
    text = text.strip()
    base = getattr(tp, "__args__", (tp,))
    optional = type(None) in base
    base = [t for t in base if t is not type(None)][0]
    if optional and text.lower() in ("", "none", "auto"):
        return None
    if base is bool:
        return text.lower() in ("1", "true", "yes")
    if base is int:
        return int(text)
    if base is float:
        return float(text)
    if base is list:
        return [float(t) for t in text.split(",") if t.strip()]
    if base is Path:
        return Path(text)
    return text


def all_keys() -> list[str]:
    keys = []
    for f in dataclasses.fields(RunConfig):
        cls = f.default_factory
        keys += [f"{f.name}.{g.name}" for g in dataclasses.fields(cls)]
    return keys


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    cfg = base or RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        cfg.set(key, value)
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text())


def exact_solution(cfg: RunConfig, spec: GridSpec) -> np.ndarray:
    """Values of the configured exact potential on the grid."""
    x = spec.coords()
    s = cfg.solve
    if s.exact == "quadratic":
        q = np.asarray(s.q if s.q is not None else [1.0] * spec.n, float)
        if q.size == spec.n:
            Q = np.diag(q)
        elif q.size == spec.n**2:
            Q = q.reshape(spec.n, spec.n)
            Q = 0.5 * (Q + Q.T)
        else:
            raise ConfigError("solve.q needs n or n*n values")
        return 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)
    if s.exact == "power":
        if not s.power > 1:
            raise ConfigError("solve.power must exceed 1")
        return np.linalg.norm(x, axis=-1) ** s.power / s.power
    raise ConfigError(f"unknown solve.exact {s.exact!r}")

"""Right-hand sides psi(x, u, Du) of Lagrangian mean curvature type equations."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import GridSpec, jacobi_eigh


class Variant(str, Enum):
    CONSTANT = "constant"
    SELF_SIMILAR = "self_similar"
    TRANSLATOR = "translator"
    ROTATOR = "rotator"
    SINGULAR = "singular"
    TABULATED = "tabulated"


class PhaseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PhaseSpec:
    """Tagged description of a phase.

    ``table`` (Tabulated only) holds psi sampled on a tensor grid over the
    ``2n`` variables ``(x_1..x_n, p_1..p_n)``: ``table_axes`` lists the node
    coordinates of each of those variables.
    """

    variant: Variant
    n: int
    c: float = 0.0
    b: float = 0.0
    k: tuple[float, ...] = ()
    l: tuple[float, ...] = ()
    a: float = 0.0
    beta: float = 0.5
    table: Optional[np.ndarray] = None
    table_axes: tuple = ()
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        v = self.variant
        if v is Variant.SINGULAR and not 0 < self.beta < 1:
            raise PhaseError("singular family needs beta in (0, 1)")
        if v is Variant.TRANSLATOR:
            k = tuple(float(t) for t in self.k) or (0.0,) * self.n
            l = tuple(float(t) for t in self.l) or (0.0,) * self.n
            if len(k) != self.n or len(l) != self.n:
                raise PhaseError("translator vectors must have length n")
            object.__setattr__(self, "k", k)
            object.__setattr__(self, "l", l)
        if v is Variant.TABULATED:
            if self.table is None or len(self.table_axes) != 2 * self.n:
                raise PhaseError("tabulated phase needs a table over 2n axes")
            interp = RegularGridInterpolator(
                [np.asarray(ax, float) for ax in self.table_axes],
                np.asarray(self.table, float),
                method="linear",
                bounds_error=True,
            )
            object.__setattr__(self, "_interp", interp)

    # convenience constructors
    @classmethod
    def constant(cls, n, c):
        return cls(Variant.CONSTANT, n, c=c)

    @classmethod
    def self_similar(cls, n, c, b):
        return cls(Variant.SELF_SIMILAR, n, c=c, b=b)

    @classmethod
    def translator(cls, n, c, k, l):
        return cls(Variant.TRANSLATOR, n, c=c, k=tuple(k), l=tuple(l))

    @classmethod
    def rotator(cls, n, c, a):
        return cls(Variant.ROTATOR, n, c=c, a=a)

    @classmethod
    def singular(cls, n, beta):
        return cls(Variant.SINGULAR, n, beta=beta)

    @classmethod
    def tabulated(cls, n, axes, table):
        return cls(Variant.TABULATED, n, table=np.asarray(table, float), table_axes=tuple(axes))

    @property
    def depends_on_u(self) -> bool:
        return self.variant is Variant.SELF_SIMILAR


def singular_phase(n: int, beta: float, pnorm):
    """Phase solved by ``|x|^(1+beta)/(1+beta)``, as a function of ``|Du|``; ``n*pi/2`` at ``|Du| = 0``."""
    pnorm = np.asarray(pnorm, float)
    e = 1.0 / beta - 1.0
    with np.errstate(divide="ignore"):
        t = np.where(pnorm > 0, pnorm, 1.0) ** e
    val = n * np.pi / 2 - (n - 1) * np.arctan(t) - np.arctan(t / beta)
    return np.where(pnorm > 0, val, n * np.pi / 2)


def eval_phase(spec: PhaseSpec, x, u, p):
    """Evaluate psi; ``x`` and ``p`` broadcast with trailing axis of length n."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    u = np.asarray(u, float)
    if x.shape[-1] != spec.n or p.shape[-1] != spec.n:
        raise PhaseError("point dimension does not match phase dimension")
    v = spec.variant
    shape = np.broadcast_shapes(x.shape[:-1], p.shape[:-1], u.shape)
    if v is Variant.CONSTANT:
        out = np.full(shape, spec.c)
    elif v is Variant.SELF_SIMILAR:
        out = spec.c + spec.b * (np.sum(x * p, axis=-1) - 2 * u)
    elif v is Variant.TRANSLATOR:
        out = spec.c + x @ np.asarray(spec.k) + p @ np.asarray(spec.l)
    elif v is Variant.ROTATOR:
        out = spec.c + 0.5 * spec.a * (np.sum(x * x, axis=-1) + np.sum(p * p, axis=-1))
    elif v is Variant.SINGULAR:
        out = singular_phase(spec.n, spec.beta, np.linalg.norm(p, axis=-1))
    else:
        xp = np.concatenate(np.broadcast_arrays(x, p), axis=-1)
        try:
            out = spec._interp(xp.reshape(-1, 2 * spec.n)).reshape(xp.shape[:-1])
        except ValueError as err:
            raise PhaseError("query outside tabulated phase") from err
    out = np.broadcast_to(out, shape)
    return float(out) if out.ndim == 0 else np.array(out)


@dataclass
class ConvexityReport:
    min_eigenvalue: float
    tol: float
    passed: bool
    worst_x: np.ndarray
    worst_u: float
    worst_p: np.ndarray


def partial_convexity_check(spec: PhaseSpec, x_samples, u_samples, p_grid: GridSpec,
                            tol: Optional[float] = None, C: float = 1.0) -> ConvexityReport:
    """Smallest eigenvalue of the p-Hessian of psi over a p-grid, for each frozen (x, u).

    ``p_grid`` is the box of gradients to scan; second differences are taken
    on its interior nodes. Default tolerance is ``1e-8 + C*h^2``.
    """
    from .grid import GridFunction, hessian_field

    x_samples = np.atleast_2d(np.asarray(x_samples, float))
    u_samples = np.broadcast_to(np.asarray(u_samples, float), x_samples.shape[:1])
    if tol is None:
        tol = 1e-8 + C * p_grid.h**2
    P = p_grid.coords()
    worst = (np.inf, None, None, None)
    for x, u in zip(x_samples, u_samples):
        vals = eval_phase(spec, np.broadcast_to(x, P.shape), u, P)
        H = hessian_field(GridFunction(p_grid, vals))
        lam = jacobi_eigh(H).values[..., 0]
        k = np.unravel_index(np.argmin(lam), lam.shape)
        if lam[k] < worst[0]:
            worst = (float(lam[k]), x, float(u), p_grid.point(tuple(i + 1 for i in k)))
    return ConvexityReport(worst[0], tol, worst[0] >= -tol, worst[1], worst[2], worst[3])


@dataclass
class RangeReport:
    min: float
    max: float
    lower: float
    upper: float
    in_range: bool


def phase_range_check(spec: PhaseSpec, x, u, p) -> RangeReport:
    """Min/max of psi over samples against the admissible band ``[0, n*pi/2]``."""
    vals = np.atleast_1d(eval_phase(spec, x, u, p))
    lo, hi = 0.0, spec.n * np.pi / 2
    vmin, vmax = float(vals.min()), float(vals.max())
    ok = vmin >= lo - 1e-12 and vmax <= hi + 1e-12
    return RangeReport(vmin, vmax, lo, hi, ok)

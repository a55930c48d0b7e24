"""Regularity diagnostics: Hoelder exponent fits, VMO modulus, rank fields, dual convexity."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .convex import covering_dual_spec, legendre_pair, slope_range
from .grid import GridError, GridFunction, GridSpec, embed_interior, hessian_field, jacobi_eigh


class DiagnosticError(ValueError):
    pass


@dataclass
class HolderFit:
    point: np.ndarray
    radii: np.ndarray
    oscillation: np.ndarray
    exponent: float
    constant: float
    residual: float


def local_oscillation(u: GridFunction, point, radius: float) -> float:
    """Sup of ``|u - A|`` over the ball, ``A`` the least-squares affine fit on the same nodes."""
    X = u.spec.coords().reshape(-1, u.spec.n)
    d = X - np.asarray(point, float)
    m = np.einsum("ij,ij->i", d, d) <= radius**2 * (1 + 1e-12)
    if m.sum() < u.spec.n + 2:
        raise DiagnosticError(f"too few nodes within radius {radius:g}")
    A = np.column_stack([np.ones(m.sum()), d[m]])
    v = u.values.ravel()[m]
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(np.max(np.abs(v - A @ coef)))


def holder_exponent_fit(u: GridFunction, point, radii: Sequence[float]) -> HolderFit:
    """Slope of log(oscillation) against log(radius) at ``point``.

    Radii whose ball leaves the grid or holds too few nodes are dropped;
    fewer than four usable radii is an error.
    """
    point = np.asarray(point, float)
    lo, hi = np.asarray(u.spec.lo), np.asarray(u.spec.hi)
    used, osc = [], []
    for r in sorted(float(r) for r in radii):
        if np.any(point - r < lo - 1e-12) or np.any(point + r > hi + 1e-12):
            continue
        try:
            o = local_oscillation(u, point, r)
        except DiagnosticError:
            continue
        if o > 0:
            used.append(r)
            osc.append(o)
    if len(used) < 4:
        raise DiagnosticError(f"need at least 4 usable radii, got {len(used)}")
    lr, lo_ = np.log(used), np.log(osc)
    slope, icpt = np.polyfit(lr, lo_, 1)
    resid = float(np.max(np.abs(lo_ - (slope * lr + icpt))))
    return HolderFit(point, np.asarray(used), np.asarray(osc), float(slope), float(np.exp(icpt)), resid)


def geometric_radii(r_min: float, r_max: float, count: int = 6) -> np.ndarray:
    return np.geomspace(r_min, r_max, count)


# ------------------------------------------------------------ VMO

def _ball_offsets(n: int, k: int) -> np.ndarray:
    rng = np.arange(-k, k + 1)
    off = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return off[np.sum(off**2, axis=1) <= k * k]


def vmo_modulus(H: np.ndarray, h: float, radii: Sequence[float]) -> np.ndarray:
    """Discrete VMO modulus of a matrix field.

    ``H`` has shape ``(k,)*n + (n, n)`` (or ``(k,)*n`` for a scalar field)
    on a uniform grid of spacing ``h``. For each radius the mean Frobenius
    deviation from the ball average is maximised over centres whose whole
    ball lies inside the field.
    """
    H = np.asarray(H, float)
    shape = H.shape
    n = next(d for d in range(1, 5) if len(shape) in (d, d + 2) and all(s == shape[0] for s in shape[:d])
             and (len(shape) == d or shape[d:] == (d, d)))
    grid_shape = shape[:n]
    flat = H.reshape(grid_shape + (-1,))
    out = []
    for r in radii:
        k = int(np.floor(r / h + 1e-9))
        if k < 1:
            raise DiagnosticError(f"radius {r:g} smaller than one grid step")
        L = grid_shape[0] - 2 * k
        if L < 1:
            raise DiagnosticError(f"radius {r:g} does not fit inside the field")
        offs = _ball_offsets(n, k)

        def view(o):
            return flat[tuple(slice(k + c, k + c + L) for c in o)]

        # average as an offset from one sample: exact on constant fields
        ref = view(offs[0])
        avg = ref + sum(view(o) - ref for o in offs) / len(offs)
        dev = sum(np.sqrt(np.sum((view(o) - avg) ** 2, axis=-1)) for o in offs) / len(offs)
        out.append(float(dev.max()))
    return np.asarray(out)


# ------------------------------------------------------------ rank

@dataclass
class RankReport:
    rank: np.ndarray
    eig_tol: float
    constant: bool
    boundary: list = field(default_factory=list)


def rank_field(u: GridFunction, eig_tol: Optional[float] = None) -> RankReport:
    """Count Hessian eigenvalues above ``eig_tol`` (default ``10*h``) at interior nodes.

    ``boundary`` lists interior multi-indices (in grid coordinates) that
    have a face neighbour with a different rank.
    """
    tol = 10 * u.spec.h if eig_tol is None else eig_tol
    lam = jacobi_eigh(hessian_field(u)).values
    rank = np.sum(lam > tol, axis=-1)
    constant = bool(np.all(rank == rank.flat[0]))
    edges = []
    if not constant:
        diff = np.zeros(rank.shape, dtype=bool)
        for ax in range(rank.ndim):
            d = np.diff(rank, axis=ax) != 0
            pad_lo = [(0, 0)] * rank.ndim
            pad_hi = [(0, 0)] * rank.ndim
            pad_lo[ax] = (1, 0)
            pad_hi[ax] = (0, 1)
            diff |= np.pad(d, pad_lo) | np.pad(d, pad_hi)
        edges = [tuple(int(i) + 1 for i in idx) for idx in np.argwhere(diff)]
    return RankReport(rank, tol, constant, edges)


# ------------------------------------------------------------ dual convexity

@dataclass
class DualConvexityReport:
    min_eigenvalue: float
    floor: float
    point: np.ndarray
    direction: np.ndarray
    flatness: float
    flatness_residual: float
    alpha: float
    beta: float
    lower_exponent: float   # 1 + 1/beta
    upper_exponent: float   # 2 + alpha
    strongly_convex: bool
    borderline: bool
    verdict: str
    consistent: bool


def _even_growth(interp, points, directions, ts):
    """Even part ``(f(p+tv) + f(p-tv))/2 - f(p)`` for a batch of points and unit directions."""
    ts = np.asarray(ts, float)
    k = len(ts)
    off = ts[None, :, None] * directions[:, None, :]
    pts = np.concatenate([points[:, None] + off, points[:, None] - off, points[:, None]], axis=1)
    vals = interp(pts.reshape(-1, points.shape[1])).reshape(len(points), 2 * k + 1)
    return 0.5 * (vals[:, :k] + vals[:, k:2 * k]) - vals[:, -1:]


def _loglog_slopes(ts, even):
    """Least-squares slope and max residual of log(even) vs log(ts), row by row."""
    lt = np.log(ts)
    with np.errstate(invalid="ignore", divide="ignore"):
        le = np.log(np.where(even > 0, even, np.nan))
    lc = lt - lt.mean()
    slope = ((le - le.mean(axis=1, keepdims=True)) * lc).sum(axis=1) / (lc**2).sum()
    icpt = le.mean(axis=1) - slope * lt.mean()
    resid = np.max(np.abs(le - (slope[:, None] * lt + icpt[:, None])), axis=1)
    return slope, resid


def _interpolator(f: GridFunction):
    return RegularGridInterpolator(f.spec.axes(), f.values, method="cubic" if f.spec.m >= 4 else "linear")


def directional_flatness(f: GridFunction, point, direction, ts: Sequence[float]) -> tuple[float, float]:
    """Growth exponent of the even part ``(f(p+tv) + f(p-tv))/2 - f(p)`` along ``v``.

    The even part removes the linear term exactly, so no gradient estimate
    is needed. Values off the nodes come from cubic interpolation.
    """
    p = np.asarray(point, float)[None]
    v = np.asarray(direction, float)
    v = (v / np.linalg.norm(v))[None]
    even = _even_growth(_interpolator(f), p, v, ts)
    if np.any(even <= 0):
        raise DiagnosticError("non-positive growth along the test direction")
    e, r = _loglog_slopes(np.asarray(ts, float), even)
    return float(e[0]), float(r[0])


def dual_convexity_check(U: GridFunction, alpha: float, beta: float, dual_h: Optional[float] = None,
                         margin: float = 0.25, exponent_tol: float = 0.05,
                         refine: bool = True) -> DualConvexityReport:
    """Test the strong-convexity dichotomy for the transform of ``U``.

    ``U*`` is computed (with local refinement) on a dual grid of spacing
    ``dual_h`` (default ``h``) over the slope range of ``U``. Candidate
    degenerate points are the node of smallest Hessian eigenvalue together
    with every node whose smallest eigenvalue is below the floor ``10*dual_h``,
    restricted to nodes at least ``margin`` (fraction of the half width) from
    the edge of the dual box. Along each candidate's minimum eigenvector the
    flatness exponent ``e`` of the even part is fitted over radii up to that
    distance; the candidate with the least total growth is reported.

    The verdict: ``e`` within ``exponent_tol`` of 2 with a positive
    eigenvalue is strong convexity. Otherwise the point is degenerate and is
    compared against ``1 + 1/beta`` (the flattest allowed by the primal
    regularity) and ``2 + alpha`` (what ``U*`` in ``C^{2+alpha}`` would force).
    """
    spec = U.spec
    n = spec.n
    dual_h = dual_h or spec.h
    gmin, gmax = slope_range(U)
    dual = covering_dual_spec(gmin, gmax, dual_h, pad=0)
    pair = legendre_pair(U, dual, method="auto", refine=refine, check_range=False)
    Ustar = pair.dual
    lam = jacobi_eigh(hessian_field(Ustar))
    lo, hi = np.asarray(dual.lo), np.asarray(dual.hi)
    reach = margin * 0.5 * float(np.min(hi - lo))
    X = dual.interior_coords()
    far = np.all((X - lo >= reach - 1e-12) & (hi - X >= reach - 1e-12), axis=-1)
    ok = far & pair.interior_mask()[(slice(1, -1),) * n]
    if not np.any(ok):
        raise DiagnosticError("no trusted dual node away from the edge; widen the grid or reduce margin")
    lmin = np.where(ok, lam.values[..., 0], np.inf)
    floor = 10 * dual_h
    cand = ok & (lmin <= floor)
    cand[np.unravel_index(np.argmin(lmin), lmin.shape)] = True
    idx = np.argwhere(cand)
    pts = X[tuple(idx.T)]
    vecs = lam.vectors[tuple(idx.T)][..., 0]
    ts = np.geomspace(max(4 * dual_h, reach / 10), reach, 6)
    if ts[0] >= ts[-1]:
        raise DiagnosticError("dual grid too coarse for the flatness fit")
    even = _even_growth(_interpolator(Ustar), pts, vecs, ts)
    e_all, r_all = _loglog_slopes(ts, even)
    if np.all(np.isnan(e_all)):
        raise DiagnosticError("non-positive growth at every candidate point")
    # flattest candidate: least total growth over the test radii
    with np.errstate(invalid="ignore", divide="ignore"):
        growth = np.log(np.where(even > 0, even, np.nan)).sum(axis=1)
    j = int(np.nanargmin(growth))
    e, e_res = float(e_all[j]), float(r_all[j])
    k = tuple(idx[j])
    lam_pt = float(lmin[k])
    lam_min = float(lmin[np.isfinite(lmin)].min())

    lower = 1 + 1 / beta
    upper = 2 + alpha
    strongly = lam_pt > 0 and abs(e - 2) <= exponent_tol
    borderline = (not strongly) and abs(e - lower) <= exponent_tol
    if strongly:
        verdict, ok_ = "strongly convex", True
    elif not upper > lower:
        verdict, ok_ = "borderline family: exponent pair outside the range of the dichotomy", True
    elif e < upper - exponent_tol:
        verdict, ok_ = "U* not C^{2+alpha} at the degenerate point, no contradiction", True
    else:
        verdict, ok_ = "degenerate point at least as flat as |x|^{2+alpha}: contradicts the dichotomy", False
    return DualConvexityReport(lam_min, floor, pts[j], vecs[j], e, e_res, alpha, beta, lower, upper,
                               strongly, borderline, verdict, ok_)

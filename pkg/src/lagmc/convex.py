"""Discrete Legendre-Fenchel transforms, convex envelopes and the pi/4 rotation.

The brute-force transform (maximum of ``x.s - u(x)`` over every primal node)
is the reference. ``separable`` nests one-dimensional maxima axis by axis and
``hull`` is the linear-time upper-envelope walk for ``n == 1``; both return
the same grid maximum.

``refine=True`` replaces each grid maximum by the maximum of the local
quadratic model of ``u`` at the maximising node. This costs nothing in the
Fenchel-Young direction (the model is exact at the node) and lifts the
value error from O(h^2) to O(h^3), which is what makes second differences of
a transform meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np

from .grid import (
    GridFunction,
    GridSpec,
    embed_interior,
    gradient_field,
    hessian_field,
    jacobi_eigh,
)

C45 = np.cos(np.pi / 4)
S45 = np.sin(np.pi / 4)


class TransformError(ValueError):
    pass


class ConvexityError(TransformError):
    pass


@dataclass(eq=False)
class LegendrePair:
    primal: GridFunction
    dual: GridFunction
    argmax: np.ndarray      # flat primal index of the grid maximiser, shape of dual grid
    maximizer: np.ndarray   # refined maximiser coordinates, dual shape + (n,)

    @property
    def dual_spec(self) -> GridSpec:
        return self.dual.spec

    def interior_mask(self) -> np.ndarray:
        """Dual nodes whose maximiser is an interior primal node (the sup is not cut by the box)."""
        idx = np.stack(np.unravel_index(self.argmax, self.primal.spec.shape), axis=-1)
        m = self.primal.spec.m
        return np.all((idx > 0) & (idx < m - 1), axis=-1)


# ---------------------------------------------------------------- transforms

def slope_range(u: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    g = gradient_field(u).reshape(-1, u.spec.n)
    return g.min(axis=0), g.max(axis=0)


def covering_dual_spec(lo, hi, h: float, pad: int = 2) -> GridSpec:
    """Cube grid aligned to multiples of ``h`` that covers ``[lo, hi]`` with ``pad`` extra nodes."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    k_lo = np.floor(lo / h - 1e-9) - pad
    k_hi = np.ceil(hi / h + 1e-9) + pad
    m = int(np.max(k_hi - k_lo)) + 1
    return GridSpec(len(lo), tuple(k_lo * h), h, max(m, 5))


def _check_covers(u: GridFunction, dual: GridSpec, tol: float = 1e-12):
    gmin, gmax = slope_range(u)
    lo, hi = np.asarray(dual.lo), np.asarray(dual.hi)
    if np.any(lo > gmin + tol) or np.any(hi < gmax - tol):
        raise TransformError(
            f"dual range too small: slopes span [{gmin}, {gmax}], dual grid spans [{lo}, {hi}]"
        )


def _brute(u: GridFunction, dual: GridSpec, threads: int = 1):
    X = u.spec.coords().reshape(-1, u.spec.n)
    U = u.values.ravel()
    S = dual.coords().reshape(-1, dual.n)
    vals = np.empty(len(S))
    arg = np.empty(len(S), dtype=np.int64)
    chunk = max(1, int(4e6 // max(len(X), 1)))
    starts = range(0, len(S), chunk)

    def work(i0):
        block = S[i0:i0 + chunk] @ X.T - U
        j = np.argmax(block, axis=1)
        arg[i0:i0 + chunk] = j
        vals[i0:i0 + chunk] = block[np.arange(len(j)), j]

    _run_blocks(work, starts, threads)
    return vals.reshape(dual.shape), arg.reshape(dual.shape)


def _run_blocks(work, starts, threads: int):
    """Apply ``work`` to each block start; blocks write disjoint slices, so order is irrelevant."""
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for i0 in starts:
            work(i0)


def _separable(u: GridFunction, dual: GridSpec, threads: int = 1):
    """Nested 1D maxima: sup over x of sum_i x_i s_i - u(x), one axis at a time.

    Each pass records its argmax; backtracking from the last axis recovers the
    full maximiser.
    """
    n = u.spec.n
    g = -u.values
    xs = u.spec.axes()
    ss = dual.axes()
    passes = []
    for i in range(n):
        g = np.moveaxis(g, i, -1)
        lead = g.shape[:-1]
        flat = g.reshape(-1, g.shape[-1])
        vals = np.empty((flat.shape[0], len(ss[i])))
        arg = np.empty((flat.shape[0], len(ss[i])), dtype=np.int64)
        step = max(1, int(4e6 // (len(ss[i]) * len(xs[i]))))

        def work(r0, i=i, flat=flat, vals=vals, arg=arg, step=step):
            block = flat[r0:r0 + step, None, :] + ss[i][None, :, None] * xs[i][None, None, :]
            j = np.argmax(block, axis=-1)
            arg[r0:r0 + step] = j
            vals[r0:r0 + step] = np.take_along_axis(block, j[..., None], axis=-1)[..., 0]

        _run_blocks(work, range(0, flat.shape[0], step), threads)
        g = np.moveaxis(vals.reshape(lead + (len(ss[i]),)), -1, i)
        passes.append(np.moveaxis(arg.reshape(lead + (len(ss[i]),)), -1, i))
    # passes[i] is indexed by (s_0..s_i, x_{i+1}..x_{n-1})
    grids = np.indices(dual.shape)
    xidx = [None] * n
    for i in reversed(range(n)):
        key = tuple(grids[k] for k in range(i + 1)) + tuple(xidx[k] for k in range(i + 1, n))
        xidx[i] = passes[i][key]
    arg = np.ravel_multi_index(tuple(xidx), u.spec.shape)
    return g, arg


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by x (monotone chain)."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def _hull_1d(u: GridFunction, dual: GridSpec):
    x = u.spec.axes()[0]
    y = u.values
    hull = _lower_hull(x, y)
    hx, hy = x[hull], y[hull]
    edge = np.diff(hy) / np.diff(hx)
    s = dual.axes()[0]
    # vertex k maximises for edge[k-1] <= s <= edge[k]; ties go to the left vertex
    k = np.searchsorted(edge, s, side="left")
    j = hull[k]
    return s * x[j] - y[j], j


def _refine(u: GridFunction, dual: GridSpec, vals: np.ndarray, arg: np.ndarray):
    """Maximise the local quadratic model at each maximising interior node."""
    spec = u.spec
    n, h = spec.n, spec.h
    X = spec.coords().reshape(-1, n)
    S = dual.coords().reshape(-1, n)
    arg_f = arg.ravel()
    xstar = X[arg_f].copy()
    out = vals.ravel().copy()

    idx = np.stack(np.unravel_index(arg_f, spec.shape), axis=-1)
    inner = np.all((idx > 0) & (idx < spec.m - 1), axis=-1)
    if not np.any(inner):
        return out.reshape(dual.shape), xstar.reshape(dual.shape + (n,))
    G = gradient_field(u)
    H = hessian_field(u)
    # definiteness is a property of the primal node, so test each node once
    lam_all = jacobi_eigh(H).values[..., 0]
    pos = lam_all > 1e-12 * (1 + np.abs(H).max(axis=(-1, -2)))
    ii = tuple((idx[inner] - 1).T)
    ok = pos[ii]
    ii = tuple(c[ok] for c in ii)
    g = G[ii]
    Hs = H[ii]
    rows = np.flatnonzero(inner)[ok]
    r = S[rows] - g
    delta = np.linalg.solve(Hs, r[..., None])[..., 0]
    # keep the step inside the neighbouring cells, where the model is trusted
    scale = np.minimum(1.0, h / np.maximum(np.abs(delta).max(axis=-1), 1e-300))
    delta *= scale[:, None]
    gain = np.einsum("ki,ki->k", r, delta) - 0.5 * np.einsum("ki,kij,kj->k", delta, Hs, delta)
    out[rows] += np.maximum(gain, 0.0)
    xstar[rows] += delta
    return out.reshape(dual.shape), xstar.reshape(dual.shape + (n,))


def legendre_pair(u: GridFunction, dual_spec: GridSpec, method: str = "brute",
                  refine: bool = False, check_range: bool = True, threads: int = 1) -> LegendrePair:
    """Transform with maximiser bookkeeping; see :func:`legendre_transform`."""
    if dual_spec.n != u.spec.n:
        raise TransformError("primal and dual dimensions differ")
    if check_range:
        _check_covers(u, dual_spec)
    if method == "brute":
        vals, arg = _brute(u, dual_spec, threads)
    elif method == "hull":
        if u.spec.n != 1:
            raise TransformError("hull method is one-dimensional")
        vals, arg = _hull_1d(u, dual_spec)
    elif method == "separable":
        vals, arg = _separable(u, dual_spec, threads)
    elif method == "auto":
        if u.spec.n == 1:
            vals, arg = _hull_1d(u, dual_spec)
        else:
            vals, arg = _separable(u, dual_spec, threads)
    else:
        raise TransformError(f"unknown method {method!r}")
    if refine:
        vals, xstar = _refine(u, dual_spec, vals, arg)
    else:
        xstar = u.spec.coords().reshape(-1, u.spec.n)[arg.ravel()].reshape(dual_spec.shape + (u.spec.n,))
    return LegendrePair(u, GridFunction(dual_spec, vals), arg, xstar)


def legendre_transform(u: GridFunction, dual_spec: GridSpec, method: str = "brute",
                       refine: bool = False, check_range: bool = True, threads: int = 1) -> GridFunction:
    """Discrete transform ``u*(s) = max_x (x.s - u(x))`` on the nodes of ``dual_spec``.

    The dual grid must cover the central-difference slope range of ``u``;
    otherwise part of the slope image is missing and a ``TransformError``
    ("dual range too small") is raised.
    """
    return legendre_pair(u, dual_spec, method, refine, check_range, threads).dual


# ---------------------------------------------------------------- convexity

@dataclass
class ConvexityCheck:
    min_eigenvalue: float
    tol: float
    passed: bool
    violations: list  # grid multi-indices, lexicographic order

    def first_violation(self):
        return self.violations[0] if self.violations else None


def min_eigenvalue_field(u: GridFunction) -> np.ndarray:
    return jacobi_eigh(hessian_field(u)).values[..., 0]


def convexity_check(u: GridFunction, tol: float = 1e-8, exclude: Optional[np.ndarray] = None) -> ConvexityCheck:
    """Smallest Hessian eigenvalue over interior nodes; ``exclude`` masks nodes (full-grid bool array)."""
    lam = embed_interior(u.spec, min_eigenvalue_field(u), np.inf)
    if exclude is not None:
        lam = np.where(exclude, np.inf, lam)
    bad = np.argwhere(lam < -tol)
    lam_min = float(lam.min())
    return ConvexityCheck(lam_min, tol, lam_min >= -tol, [tuple(int(i) for i in b) for b in bad])


# ---------------------------------------------------------------- envelope

def convex_envelope(u: GridFunction, dual_h: Optional[float] = None) -> GridFunction:
    """Largest convex minorant on the grid as the biconjugate ``(u*)*``.

    The dual grid spans the range of forward-difference slopes (every lower
    hull facet slope lies there) with spacing ``dual_h`` (default ``h/2``).
    The result is exact wherever each node's discrete subdifferential
    contains a dual node, which holds for the common test functions.
    """
    spec = u.spec
    dual_h = dual_h or spec.h / 2
    lo, hi = [], []
    for i in range(spec.n):
        d = np.diff(u.values, axis=i) / spec.h
        lo.append(d.min())
        hi.append(d.max())
    dual = covering_dual_spec(lo, hi, dual_h, pad=1)
    ustar = legendre_transform(u, dual, check_range=False)
    env = legendre_transform(ustar, spec, check_range=False)
    # the biconjugate never exceeds u; pin the rounding
    return GridFunction(spec, np.minimum(env.values, u.values))


# ---------------------------------------------------------------- rotation

@dataclass(eq=False)
class RotatedPotential:
    """Rotated potential: scattered images of the primal nodes plus a cube resample.

    ``points``/``values``/``gradients`` are the images of interior primal
    nodes. ``grid`` is ubar on a cube of dual nodes, and ``preimage`` gives
    for each of its nodes the primal point ``x(xbar)``.
    """

    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    grid: GridFunction
    preimage: np.ndarray
    source: Optional[GridSpec] = None
    shrink: float = 0.8

    @property
    def n(self) -> int:
        return self.grid.spec.n


def _largest_valid_cube(valid: np.ndarray, target) -> tuple[tuple[int, ...], int]:
    """Biggest all-true cube in a boolean array, nearest to ``target`` among the biggest."""
    n = valid.ndim
    m = valid.shape[0]
    csum = np.zeros(tuple(s + 1 for s in valid.shape), dtype=np.int64)
    csum[(slice(1, None),) * n] = valid.astype(np.int64)
    for ax in range(n):
        csum = np.cumsum(csum, axis=ax)

    def full(k):
        L = m - k + 1
        total = np.zeros((L,) * n, dtype=np.int64)
        for corner in product((0, 1), repeat=n):
            sl = tuple(slice(k, k + L) if c else slice(0, L) for c in corner)
            total += (-1) ** (n - sum(corner)) * csum[sl]
        return total == k**n

    if m < 5 or not np.any(full(5)):
        raise TransformError("rotated domain too small for a 5-point cube")
    lo, hi = 5, m
    while lo < hi:  # a valid k-cube contains a valid (k-1)-cube
        mid = (lo + hi + 1) // 2
        if np.any(full(mid)):
            lo = mid
        else:
            hi = mid - 1
    ok = np.argwhere(full(lo))
    centres = ok + (lo - 1) / 2
    best = ok[np.argmin(np.sum((centres - np.asarray(target)) ** 2, axis=1))]
    return tuple(int(i) for i in best), lo


def _transform_on_box(f: GridFunction, h_out: float, shrink: float, pad: int = 2, cover: str = "box",
                      threads: int = 1):
    """Refined transform of ``f`` restricted to the largest cube whose maximisers sit in the shrunk box.

    ``cover="ball"`` sizes the dual grid by the slopes inside the ball
    inscribed in the shrunk box instead of the whole box. The cube found can
    be slightly smaller but the dual grid is far smaller for radial data.
    """
    spec = f.spec
    centre = 0.5 * (np.asarray(spec.lo) + np.asarray(spec.hi))
    half = 0.5 * (np.asarray(spec.hi) - np.asarray(spec.lo))
    if cover == "box":
        gmin, gmax = slope_range(f)
    elif cover == "ball":
        G = gradient_field(f)
        d = (spec.interior_coords() - centre) / (shrink * half)
        inside = np.sum(d**2, axis=-1) <= 1.0
        if not np.any(inside):
            raise TransformError("no interior node inside the covering ball")
        gmin, gmax = G[inside].min(axis=0), G[inside].max(axis=0)
    else:
        raise TransformError(f"unknown cover {cover!r}")
    dual = covering_dual_spec(gmin, gmax, h_out, pad)
    pair = legendre_pair(f, dual, method="auto", refine=True, check_range=False, threads=threads)
    inside = np.all(np.abs(pair.maximizer - centre) <= shrink * half * (1 + 1e-12), axis=-1)
    valid = inside & pair.interior_mask()
    # image of the primal centre locates the target cube
    kc = spec.nearest_index(centre)
    if all(0 < k < spec.m - 1 for k in kc):
        from .grid import gradient_central

        target = dual.nearest_index(gradient_central(f, kc))
    else:
        target = tuple([dual.m // 2] * dual.n)
    corner, k = _largest_valid_cube(valid, target)
    sl = tuple(slice(c, c + k) for c in corner)
    box = GridSpec(dual.n, tuple(dual.point(corner)), dual.h, k)
    return GridFunction(box, pair.dual.values[sl]), pair.maximizer[sl]


def lewy_yuan_rotate(u: GridFunction, dual_h: Optional[float] = None, shrink: float = 0.8,
                     convexity_tol: float = 1e-8, threads: int = 1) -> RotatedPotential:
    """Rotate the gradient graph of convex ``u`` down by pi/4.

    With ``ut = s*u + (c/2)|x|^2`` the rotated potential is
    ``ubar = (c/2s)|xbar|^2 - ut*(xbar)/s``; each Hessian angle drops by pi/4.
    ``shrink`` localises the resampled cube to the image of the central
    ``shrink`` fraction of the primal box.
    """
    chk = convexity_check(u, convexity_tol)
    if not chk.passed:
        raise ConvexityError(
            f"input not convex: min Hessian eigenvalue {chk.min_eigenvalue:.3e} at node {chk.first_violation()}"
        )
    spec = u.spec
    n = spec.n
    X = spec.coords()
    ut = GridFunction(spec, S45 * u.values + 0.5 * C45 * np.sum(X**2, axis=-1))
    conj, pre = _transform_on_box(ut, dual_h or spec.h, shrink, threads=threads)
    xb = conj.spec.coords()
    ubar = GridFunction(conj.spec, C45 / (2 * S45) * np.sum(xb**2, axis=-1) - conj.values / S45)

    xi = spec.interior_coords().reshape(-1, n)
    yi = gradient_field(u).reshape(-1, n)
    pts = C45 * xi + S45 * yi
    uti = ut.interior().ravel()
    vals = C45 / (2 * S45) * np.sum(pts**2, axis=-1) - (np.sum(xi * pts, axis=-1) - uti) / S45
    grads = -S45 * xi + C45 * yi
    return RotatedPotential(pts, vals, grads, ubar, pre, spec, shrink)


def rotated_hessians(r: RotatedPotential) -> tuple[np.ndarray, np.ndarray]:
    """Hessian of ubar from the scattered samples, one per primal grid cell.

    The gradient map ``xbar -> Dubar`` is interpolated linearly over the image
    of each cell: with ``dP`` and ``dD`` the point and gradient increments
    along the ``n`` cell edges leaving a node, the cell Hessian is
    ``dD dP^{-1}`` (symmetrised). No second differences of the resampled
    values are involved. Returns ``(centres, hessians)`` where ``centres``
    are the scattered points at the cell base nodes.
    """
    if r.source is None:
        raise TransformError("rotated potential lacks its source grid")
    n = r.n
    k = r.source.m - 2
    P = r.points.reshape((k,) * n + (n,))
    D = r.gradients.reshape((k,) * n + (n,))
    base = (slice(0, k - 1),) * n
    dP = np.empty((k - 1,) * n + (n, n))
    dD = np.empty_like(dP)
    for j in range(n):
        sl = tuple(slice(1, k) if i == j else slice(0, k - 1) for i in range(n))
        dP[..., :, j] = P[sl] - P[base]
        dD[..., :, j] = D[sl] - D[base]
    J = np.linalg.solve(np.swapaxes(dP, -1, -2), np.swapaxes(dD, -1, -2))
    J = np.swapaxes(J, -1, -2)
    return P[base], 0.5 * (J + np.swapaxes(J, -1, -2))


def aux_rotated(ubar: GridFunction) -> GridFunction:
    """``Ubar = -s*ubar + (c/2)|xbar|^2``, the convex function whose transform is ``s*u + (c/2)|x|^2``."""
    xb = ubar.spec.coords()
    return GridFunction(ubar.spec, -S45 * ubar.values + 0.5 * C45 * np.sum(xb**2, axis=-1))


def inverse_rotate(r, primal_h: Optional[float] = None, min_eig: Optional[float] = None,
                   exclude_radius: float = 0.0, shrink: float = 1.0, cover: str = "box",
                   threads: int = 1) -> GridFunction:
    """Undo :func:`lewy_yuan_rotate`: ``u = (Ubar* - (c/2)|x|^2)/s``.

    ``r`` is a :class:`RotatedPotential` or a plain grid function for ubar.
    ``Ubar`` must have minimum Hessian eigenvalue above ``min_eig`` (default
    ``10*h``) on interior nodes farther than ``exclude_radius`` from the
    origin. ``cover`` is passed to the transform (see ``_transform_on_box``).
    """
    ubar = r.grid if isinstance(r, RotatedPotential) else r
    spec = ubar.spec
    Ub = aux_rotated(ubar)
    floor = 10 * spec.h if min_eig is None else min_eig
    lam = embed_interior(spec, min_eigenvalue_field(Ub), np.inf)
    far = np.linalg.norm(spec.coords(), axis=-1) >= exclude_radius
    bad = far & (lam <= floor)
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ConvexityError(
            f"rotated potential not invertible: Ubar Hessian eigenvalue {lam[node]:.3e} <= {floor:.3e} at node {node}"
        )
    U, _ = _transform_on_box(Ub, primal_h or spec.h, shrink, cover=cover, threads=threads)
    x = U.spec.coords()
    return GridFunction(U.spec, (U.values - 0.5 * C45 * np.sum(x**2, axis=-1)) / S45)


def rotation_preimage(ubar_vals: np.ndarray, grad: np.ndarray, xbar: np.ndarray):
    """Primal point, slope and value ``(x, y, u(x))`` attached to ``xbar`` by the rotation.

    Uses ``x = c*xbar - s*Dubar``, ``y = s*xbar + c*Dubar`` and the Legendre
    identity for ``u``; no interpolation of ``u`` is needed.
    """
    x = C45 * xbar - S45 * grad
    y = S45 * xbar + C45 * grad
    ut_star = 0.5 * C45 * np.sum(xbar**2, axis=-1) - S45 * ubar_vals
    ut = np.sum(x * xbar, axis=-1) - ut_star
    u = (ut - 0.5 * C45 * np.sum(x**2, axis=-1)) / S45
    return x, y, u

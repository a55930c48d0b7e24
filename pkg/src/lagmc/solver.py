"""Dirichlet problems for sum(arctan(lambda_i(D^2 u))) = psi(x, u, Du) by parabolic relaxation.

The iteration is the explicit Euler discretisation of ``u_t = theta(D^2 u) - psi``
with the boundary frozen. Its fixed points are exactly the interior zeros of
:func:`residual_field`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np

from .grid import (
    GridFunction,
    GridSpec,
    embed_interior,
    gradient_field,
    hessian_field,
    jacobi_eigh,
)
from .convex import C45, S45, RotatedPotential, lewy_yuan_rotate, rotation_preimage
from .phase import PhaseSpec, eval_phase

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    """The explicit iteration produced non-finite values."""


def default_directions(n: int) -> list[tuple[int, ...]]:
    """Axes and all diagonals with entries in {-1, 0, 1}, one representative per +-v pair."""
    dirs = []
    for v in product((-1, 0, 1), repeat=n):
        if any(v) and next(c for c in v if c) > 0:
            dirs.append(v)
    return sorted(dirs, key=lambda v: (sum(map(abs, v)), [-c for c in v]))


def orthogonal_frames(directions: Sequence[Sequence[int]], n: int) -> list[tuple[tuple[int, ...], ...]]:
    frames = []
    for combo in combinations([tuple(d) for d in directions], n):
        if all(np.dot(a, b) == 0 for a, b in combinations(combo, 2)):
            frames.append(combo)
    return frames


@dataclass
class SolveParams:
    dt: Optional[float] = None
    max_iters: int = 200_000
    tol: float = 1e-10
    stencil: str = "central"
    directions: Optional[list] = None
    log_every: int = 0

    def __post_init__(self):
        if self.stencil not in ("central", "wide"):
            raise SolverError(f"unknown stencil {self.stencil!r}")
        if self.dt is not None and not self.dt > 0:
            raise SolverError("dt must be positive")
        if self.stencil == "wide" and self.directions is not None:
            n = len(self.directions[0])
            axes = {tuple(int(i == k) for i in range(n)) for k in range(n)}
            if not axes <= {tuple(d) for d in self.directions}:
                raise SolverError("wide direction set must contain every axis")

    def time_step(self, spec: GridSpec) -> float:
        dt = self.dt if self.dt is not None else spec.h**2 / (4 * spec.n)
        if dt > spec.h**2 / (2 * spec.n) * (1 + 1e-12):
            raise SolverError(f"dt={dt:g} violates the stability bound h^2/(2n)={spec.h**2 / (2 * spec.n):g}")
        return dt


@dataclass
class SolveReport:
    iterations: int
    update: float
    residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _interior_x(spec: GridSpec) -> np.ndarray:
    return spec.interior_coords()


def wide_angle_field(u: GridFunction, directions=None) -> np.ndarray:
    """Monotone angle approximation on interior nodes.

    For convex data the Lagrangian angle is the minimum over orthonormal
    frames of ``sum(arctan(v_k' D^2u v_k))`` (arctan is concave on the positive
    axis), so taking that minimum over frames of stencil directions gives a
    monotone, first-order scheme. Nodes too close to the boundary for the
    widest direction fall back to the central Hessian.
    """
    spec = u.spec
    n, h, v = spec.n, spec.h, u.values
    directions = directions or default_directions(n)
    frames = orthogonal_frames(directions, n)
    if not frames:
        raise SolverError("direction set contains no orthogonal frame")
    width = max(max(abs(c) for c in d) for f in frames for d in f)
    central = np.arctan(jacobi_eigh(hessian_field(u)).values).sum(axis=-1)
    if spec.m - 2 * width < 1:
        return central
    center = v[(slice(width, spec.m - width),) * n]

    def dvv(d):
        plus = v[tuple(slice(width + c, spec.m - width + c) for c in d)]
        minus = v[tuple(slice(width - c, spec.m - width - c) for c in d)]
        return (plus - 2 * center + minus) / (np.dot(d, d) * h**2)

    cache = {}
    best = None
    for frame in frames:
        total = 0.0
        for d in frame:
            if d not in cache:
                cache[d] = np.arctan(dvv(d))
            total = total + cache[d]
        best = total if best is None else np.minimum(best, total)
    out = central.copy()
    inner = (slice(width - 1, spec.m - 1 - width),) * n
    out[inner] = best
    return out


def angle_field(u: GridFunction, stencil: str = "central", directions=None) -> np.ndarray:
    if stencil == "wide":
        return wide_angle_field(u, directions)
    return np.arctan(jacobi_eigh(hessian_field(u)).values).sum(axis=-1)


def interior_residual(u: GridFunction, spec: PhaseSpec, stencil: str = "central", directions=None) -> np.ndarray:
    if spec.n != u.spec.n:
        raise SolverError("phase and grid dimensions differ")
    with np.errstate(over="ignore", invalid="ignore"):
        finite = np.all(np.isfinite(hessian_field(u)))
    if not finite:
        raise BlowUpError("blow-up: reduce dt")
    theta = angle_field(u, stencil, directions)
    psi = eval_phase(spec, _interior_x(u.spec), u.interior(), gradient_field(u))
    return theta - psi


def residual_field(u: GridFunction, spec: PhaseSpec, stencil: str = "central", directions=None) -> GridFunction:
    """Angle minus phase at interior nodes, zero on the boundary."""
    return GridFunction(u.spec, embed_interior(u.spec, interior_residual(u, spec, stencil, directions)))


def flow_step(u: GridFunction, spec: PhaseSpec, params: SolveParams) -> GridFunction:
    dt = params.time_step(u.spec)
    res = interior_residual(u, spec, params.stencil, params.directions)
    new = u.values.copy()
    inner = (slice(1, -1),) * u.spec.n
    new[inner] += dt * res
    if not np.all(np.isfinite(new)):
        raise BlowUpError("blow-up: reduce dt")
    return GridFunction(u.spec, new)


def boundary_mask(spec: GridSpec) -> np.ndarray:
    mask = np.ones(spec.shape, dtype=bool)
    mask[(slice(1, -1),) * spec.n] = False
    return mask


def solve_dirichlet(boundary: GridFunction, initial: GridFunction, spec: PhaseSpec,
                    params: SolveParams) -> tuple[GridFunction, SolveReport]:
    """Relax ``initial`` to a steady state with the boundary values of ``boundary``.

    Stops when the sup-norm of one update drops to ``params.tol``. Running out
    of iterations is reported through ``SolveReport.converged``.
    """
    if boundary.spec != initial.spec:
        raise SolverError("boundary and initial guess live on different grids")
    mask = boundary_mask(boundary.spec)
    if not np.allclose(boundary.values[mask], initial.values[mask], rtol=0, atol=1e-12):
        raise SolverError("initial guess does not match boundary data")
    dt = params.time_step(boundary.spec)
    inner = (slice(1, -1),) * boundary.spec.n
    vals = initial.values.copy()
    vals[mask] = boundary.values[mask]
    u = GridFunction(boundary.spec, vals)
    update = np.inf
    res = np.zeros(1)
    history = []
    it = 0
    for it in range(1, params.max_iters + 1):
        res = interior_residual(u, spec, params.stencil, params.directions)
        update = dt * float(np.max(np.abs(res)))
        if not np.isfinite(update):
            raise BlowUpError("blow-up: reduce dt")
        if update <= params.tol:
            # the current iterate already satisfies the stopping rule
            it -= 1
            break
        vals = u.values.copy()
        vals[inner] += dt * res
        u = GridFunction(u.spec, vals)
        if params.log_every and it % params.log_every == 0:
            history.append((it, update))
            log.info("iter %d update %.3e", it, update)
    else:
        res = interior_residual(u, spec, params.stencil, params.directions)
        update = dt * float(np.max(np.abs(res)))
    resid = float(np.max(np.abs(res)))
    return u, SolveReport(it, update, resid, update <= params.tol, history)


def rotated_residual_field(ubar: GridFunction, spec: PhaseSpec) -> GridFunction:
    """Residual of the rotated equation for a rotated potential ``ubar``.

    At interior nodes: ``theta(D^2 ubar) - psi(x, u(x), y) + n*pi/4`` where
    ``(x, y, u(x))`` is the primal point, slope and value attached to
    ``xbar`` by the rotation. Boundary nodes are 0.
    """
    if spec.n != ubar.spec.n:
        raise SolverError("phase and grid dimensions differ")
    xb = ubar.spec.interior_coords()
    grad = gradient_field(ubar)
    x, y, u = rotation_preimage(ubar.interior(), grad, xb)
    theta = np.arctan(jacobi_eigh(hessian_field(ubar)).values).sum(axis=-1)
    res = theta - eval_phase(spec, x, u, y) + spec.n * np.pi / 4
    return GridFunction(ubar.spec, embed_interior(ubar.spec, res))


def rotated_equation_residual(u: GridFunction, spec: PhaseSpec, dual_h: Optional[float] = None,
                              shrink: float = 0.8) -> GridFunction:
    """Rotate convex ``u`` and return :func:`rotated_residual_field` on the rotated cube.

    A :class:`RotatedPotential` is accepted in place of ``u``.
    """
    r = u if isinstance(u, RotatedPotential) else lewy_yuan_rotate(u, dual_h=dual_h, shrink=shrink)
    return rotated_residual_field(r.grid, spec)

"""Fixed-seed property suites behind ``lagmc verify``.

Each check reports a measured value against a bound. Suites are sized to run
in well under a minute each on one core.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex import (
    covering_dual_spec,
    inverse_rotate,
    legendre_pair,
    legendre_transform,
    lewy_yuan_rotate,
    rotated_hessians,
    slope_range,
)
from .diagnostics import dual_convexity_check, holder_exponent_fit, rank_field
from .grid import GridFunction, GridSpec, hessian_field, jacobi_eigh
from .phase import PhaseSpec
from .profiles import build_singular_rotator, rotator_profile
from .solver import SolveParams, solve_dirichlet


@dataclass
class Check:
    suite: str
    name: str
    value: float
    bound: float
    passed: bool
    relation: str = "<="

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.suite:<12} {self.name:<44} {self.value:>12.4e} {self.relation} {self.bound:.4e}"


def _le(suite, name, value, bound):
    value = float(value)
    return Check(suite, name, value, bound, bool(value <= bound))


def _power(q):
    return lambda x: np.linalg.norm(x, axis=-1) ** q / q


def _quadratic(Q):
    return lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)


def random_spd(rng, n, floor=0.1):
    A = rng.normal(size=(n, n))
    return A @ A.T / n + floor * np.eye(n)


# ------------------------------------------------------------ suites

def suite_duality(seed: int = 0) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    g = GridSpec.centered(1, 1.0, 5e-3)
    # biconjugation of a convex function on its interior
    u = GridFunction.from_callable(g, lambda x: np.cosh(x[..., 0]) + 0.3 * x[..., 0] ** 3 / 3 + 0.5 * x[..., 0] ** 2)
    d = covering_dual_spec(*slope_range(u), g.h)
    ustar = legendre_transform(u, d, method="hull")
    back = legendre_pair(ustar, g, method="hull", check_range=False)
    inner = back.interior_mask()
    err = np.abs(back.dual.values - u.values)[inner].max()
    out.append(_le("duality", "biconjugation sup error / h", err / g.h, 1.0))
    out.append(_le("duality", "(u*)* - u (must be <= 0)", (back.dual.values - u.values).max(), 1e-12))
    # order reversal, exact
    bump = np.abs(rng.normal(size=g.shape)) * 1e-3
    v = GridFunction(g, u.values + bump)
    vstar = legendre_transform(v, d, method="brute", check_range=False)
    out.append(_le("duality", "order reversal violation", (vstar.values - ustar.values).max(), 0.0))
    # power duality
    for p in (4 / 3, 1.5, 3.0, 4.0):
        w = GridFunction.from_callable(g, _power(p))
        q = p / (p - 1)
        dd = covering_dual_spec(*slope_range(w), g.h)
        pr = legendre_pair(w, dd, method="hull")
        ex = np.abs(dd.coords()[..., 0]) ** q / q
        e = np.abs(pr.dual.values - ex)[pr.interior_mask()].max()
        out.append(_le("duality", f"power duality p={p:.4g} error / h", e / g.h, 3.0))
    # fast paths agree with brute force
    g2 = GridSpec.centered(2, 1.0, 0.05)
    w = GridFunction.from_callable(g2, _quadratic(random_spd(rng, 2)))
    dd = covering_dual_spec(*slope_range(w), g2.h)
    a = legendre_transform(w, dd, method="brute").values
    b = legendre_transform(w, dd, method="separable").values
    out.append(_le("duality", "separable vs brute (n=2)", np.abs(a - b).max(), 1e-12))
    return out


def rotation_angle_error(u: GridFunction, Q: np.ndarray) -> float:
    """Sup over the rotated cube of the sorted-angle mismatch against arctan(lambda(Q)) - pi/4."""
    r = lewy_yuan_rotate(u)
    lam = jacobi_eigh(hessian_field(r.grid)).values
    target = np.sort(np.arctan(np.linalg.eigvalsh(Q)) - np.pi / 4)
    return float(np.abs(np.arctan(lam) - target).max())


def suite_rotation(seed: int = 0) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    h = 0.01
    worst = 0.0
    for n in (1, 2):
        for _ in range(3):
            Q = random_spd(rng, n)
            radius = 0.5 if n == 1 else 0.3
            u = GridFunction.from_callable(GridSpec.centered(n, radius, h), _quadratic(Q))
            worst = max(worst, rotation_angle_error(u, Q))
    out.append(_le("rotation", "angle shift error / h (quadratics)", worst / h, 5.0))
    excess = 0.0
    for k in range(4):
        n = 1 + k % 2
        h2 = 0.005 if n == 1 else 0.02
        Q = random_spd(rng, n)
        x0 = rng.uniform(-0.3, 0.3, n)
        beta = rng.uniform(0.2, 0.9)
        u = GridFunction.from_callable(GridSpec.centered(n, 0.5, h2),
                                       lambda x: _quadratic(Q)(x) + np.linalg.norm(x - x0, axis=-1) ** (1 + beta) / (1 + beta))
        _, J = rotated_hessians(lewy_yuan_rotate(u))
        lam = jacobi_eigh(J).values
        excess = max(excess, (max(lam.max() - 1, -1 - lam.min())) / h2)
    out.append(_le("rotation", "Hessian bound excess / h", excess, 10.0))
    # round trip on a common interior box
    g = GridSpec.centered(2, 0.4, 0.01)
    Q = random_spd(rng, 2)
    u = GridFunction.from_callable(g, lambda x: _quadratic(Q)(x) + 0.1 * np.sum(x**4, axis=-1))
    back = inverse_rotate(lewy_yuan_rotate(u), primal_h=g.h)
    x = back.spec.coords()
    exact = _quadratic(Q)(x) + 0.1 * np.sum(x**4, axis=-1)
    err = np.abs(back.values - exact).max()
    out.append(_le("rotation", "round trip sup error / h", err / g.h, 1.0))
    return out


def suite_solver(seed: int = 0) -> list[Check]:
    out = []
    g = GridSpec.centered(2, 0.5, 0.05)
    Q = np.eye(2)
    exact = GridFunction.from_callable(g, _quadratic(Q))
    init = exact.with_values(np.where(_interior(g), 0.0, exact.values))
    u, rep = solve_dirichlet(exact, init, PhaseSpec.constant(2, np.pi / 2), SolveParams(tol=1e-12))
    out.append(_le("solver", "quadratic recovery error (n=2)", np.abs(u.values - exact.values).max(), 1e-6))
    out.append(Check("solver", "converged flag", float(rep.converged), 1.0, rep.converged, "=="))
    g1 = GridSpec.centered(1, 0.5, 0.02)
    e1 = GridFunction.from_callable(g1, lambda x: x[..., 0] ** 2)
    i1 = e1.with_values(np.where(_interior(g1), 0.0, e1.values))
    u1, _ = solve_dirichlet(e1, i1, PhaseSpec.constant(1, np.arctan(2.0)), SolveParams(dt=g1.h**2 / 2, tol=1e-13))
    out.append(_le("solver", "u = x^2 recovery error (n=1)", np.abs(u1.values - e1.values).max(), 1e-8))
    return out


def _interior(spec: GridSpec) -> np.ndarray:
    mask = np.zeros(spec.shape, dtype=bool)
    mask[(slice(1, -1),) * spec.n] = True
    return mask


# (a, xbar radius, xbar spacing, primal spacing, fit window as fractions of the primal half width)
SINGULAR_CASES = {
    1: (-1.0, 0.49, 1e-3, 2e-6, (0.03, 0.3)),
    2: (-0.5, 0.34, 1e-2, 2e-5, (0.1, 0.5)),
    3: (-0.25, 0.28, 1e-2, 2.5e-5, (0.1, 0.5)),
}


def singular_exponent(n: int, threads: int = 1):
    """Hoelder fit of ``U`` at the origin for the singular rotator of the standard case in dimension ``n``.

    The window sits between the grid scale and the range where the
    ``O(|x|^2)`` correction to the leading power bends the log-log slope.
    """
    a, radius, h, hp, (f0, f1) = SINGULAR_CASES[n]
    p = rotator_profile(n, a)
    sr = build_singular_rotator(p, GridSpec.centered(n, radius, h), primal_h=hp, threads=threads)
    U = sr.U
    rmax = float(min(-np.max(U.spec.lo), np.min(U.spec.hi)))
    return holder_exponent_fit(U, np.zeros(n), np.geomspace(f0 * rmax, f1 * rmax, 6))


def suite_profile(seed: int = 0) -> list[Check]:
    out = []
    for n, a in ((1, -1.0), (2, -0.5), (3, -0.25)):
        p = rotator_profile(n, a)
        out.append(_le("profile", f"|f''(0) - 4a/(n+2)| n={n}", abs(p.fpp[0] - 4 * a / (n + 2)), 1e-10))
        out.append(_le("profile", f"ODE residual n={n}", np.abs(p.ode_residual()[1:]).max(), 1e-8))
    for n in (1, 2):
        fit = singular_exponent(n)
        out.append(_le("profile", f"|exponent - 4/3| n={n}", abs(fit.exponent - 4 / 3), 0.02))
    return out


def suite_diagnostics(seed: int = 0) -> list[Check]:
    out = []
    for q in (4 / 3, 1.5, 2.0, 3.0):
        u = GridFunction.from_callable(GridSpec.centered(1, 1.0, 1e-4), _power(q))
        fit = holder_exponent_fit(u, [0.0], np.geomspace(0.01, 0.5, 6))
        out.append(_le("diagnostics", f"|holder - {q:.4g}|", abs(fit.exponent - q), 0.02))
    g = GridSpec.centered(2, 1.0, 0.05)
    r1 = rank_field(GridFunction.from_callable(g, lambda x: 0.5 * x[..., 0] ** 2))
    r2 = rank_field(GridFunction.from_callable(g, lambda x: np.sum(x**2, axis=-1) ** 2 / 4))
    out.append(Check("diagnostics", "rank constant for x1^2/2", float(r1.constant), 1.0, r1.constant, "=="))
    out.append(Check("diagnostics", "rank non-constant for |x|^4/4", float(not r2.constant), 1.0, not r2.constant, "=="))
    gd = GridSpec.centered(1, 1.0, 1e-5)
    rep = dual_convexity_check(GridFunction.from_callable(gd, _power(4 / 3)), 2.0, 1 / 3, dual_h=0.01)
    out.append(_le("diagnostics", "|flatness - (1 + 1/beta)| borderline", abs(rep.flatness - 4.0), 0.05))
    rep = dual_convexity_check(GridFunction.from_callable(gd, _power(1.8)), 0.5, 0.8, dual_h=0.01)
    ok = rep.consistent and not rep.strongly_convex and rep.flatness < rep.upper_exponent
    out.append(Check("diagnostics", "off-borderline classified consistent", rep.flatness, rep.upper_exponent, ok, "<"))
    return out


SUITES: dict[str, Callable[[int], list[Check]]] = {
    "duality": suite_duality,
    "rotation": suite_rotation,
    "solver": suite_solver,
    "profile": suite_profile,
    "diagnostics": suite_diagnostics,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        return [c for s in SUITES.values() for c in s(seed)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return SUITES[name](seed)

"""Radial rotator profiles and the singular rotator potential built from them.

A radial potential ``ubar(xbar) = f(|xbar|^2 / 2)`` solves the rotated
rotator equation ``theta(D^2 ubar) = n*pi/4 + (a/2)(|xbar|^2 + |D ubar|^2)``
exactly when

    (n-1) arctan f'(s) + arctan(2 s f''(s) + f'(s)) = n pi/4 + a s (1 + f'(s)^2)

with ``f(0) = 0, f'(0) = 1``. The ``1/(2s)`` in the explicit form is a
removable singularity, so the profile starts from a Taylor polynomial whose
coefficients are solved order by order, then continues with classical RK4.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .convex import C45, S45, aux_rotated, inverse_rotate
from .grid import GridFunction, GridSpec, hessian_field, jacobi_eigh


class ProfileError(RuntimeError):
    pass


class BranchError(ProfileError):
    """The implicit arctan inversion left the principal branch."""


# ------------------------------------------------------------ power series

def _mul(a, b):
    return np.convolve(a, b)[: len(a)]


def _div(a, b):
    out = np.zeros_like(a)
    for k in range(len(a)):
        out[k] = (a[k] - np.dot(out[:k], b[k:0:-1])) / b[0]
    return out


def _deriv(a):
    return np.append(a[1:] * np.arange(1, len(a)), 0.0)


def _integ(a, c0):
    out = np.empty_like(a)
    out[0] = c0
    out[1:] = a[:-1] / np.arange(1, len(a))
    return out


def _atan(w):
    return _integ(_div(_deriv(w), np.append(1.0, 0 * w[1:]) + _mul(w, w)), np.arctan(w[0]))


def _ode_series(g, n: int, a: float):
    """Series of LHS - RHS of the profile relation, written for g = f'."""
    s = np.zeros_like(g)
    s[1] = 1.0
    inner = 2 * _mul(s, _deriv(g)) + g
    one = np.zeros_like(g)
    one[0] = 1.0
    rhs = n * np.pi / 4 * one + a * _mul(s, one + _mul(g, g))
    return (n - 1) * _atan(g) + _atan(inner) - rhs


def profile_series(n: int, a: float, degree: int = 4) -> np.ndarray:
    """Taylor coefficients of ``f`` up to ``s**degree`` (``f[0] = 0``, ``f[1] = 1``).

    The s^k coefficient of the relation depends on g_k = [s^k]f' only through
    ``(n + 2k) g_k / (1 + g_0^2)``, so each order is one linear solve.
    """
    K = degree - 1
    g = np.zeros(K + 1)
    g[0] = 1.0
    for k in range(1, K + 1):
        g[k] = 0.0
        res = _ode_series(g, n, a)[k]
        g[k] = -res * (1 + g[0] ** 2) / (n + 2 * k)
    return np.concatenate([[0.0], g / np.arange(1, K + 2)])


# ------------------------------------------------------------ profile ODE

def _g_prime(s, g, n, a):
    arg = n * np.pi / 4 + a * s * (1 + g * g) - (n - 1) * np.arctan(g)
    if not -np.pi / 2 < arg < np.pi / 2:
        raise BranchError(f"profile leaves principal branch at s={s:.6g}")
    return (np.tan(arg) - g) / (2 * s)


def _rk4(s0, y0, ds, steps, n, a):
    """Classical RK4 for (f, g) with f' = g, g' = _g_prime."""
    ys = np.empty((steps + 1, 2))
    ys[0] = y0
    s = s0
    y = np.array(y0, float)

    def rhs(s, y):
        return np.array([y[1], _g_prime(s, y[1], n, a)])

    for i in range(steps):
        k1 = rhs(s, y)
        k2 = rhs(s + ds / 2, y + ds / 2 * k1)
        k3 = rhs(s + ds / 2, y + ds / 2 * k2)
        k4 = rhs(s + ds, y + ds * k3)
        y = y + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s0 + (i + 1) * ds
        ys[i + 1] = y
    return ys


@dataclass(eq=False)
class ProfileSolution:
    n: int
    a: float
    s: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    s0: float
    coeffs: np.ndarray

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def _series(self, s, der=0):
        c = np.polynomial.polynomial.polyder(self.coeffs, der) if der else self.coeffs
        return np.polynomial.polynomial.polyval(s, c)

    def __call__(self, s, der: int = 0):
        """``f``, ``f'`` or ``f''`` at arbitrary ``s`` in ``[0, s_max]`` (cubic Hermite off the table)."""
        s = np.asarray(s, float)
        if np.any(s < -1e-15) or np.any(s > self.s_max * (1 + 1e-12)):
            raise ProfileError("evaluation outside the profile range")
        if der == 0:
            spl = CubicHermiteSpline(self.s, self.f, self.fp)
        elif der == 1:
            spl = CubicHermiteSpline(self.s, self.fp, self.fpp)
        elif der == 2:
            spl = CubicHermiteSpline(self.s, self.fp, self.fpp).derivative()
        else:
            raise ValueError("der must be 0, 1 or 2")
        return np.where(s <= self.s0, self._series(s, der), spl(s))

    def ode_residual(self, fpp=None) -> np.ndarray:
        fpp = self.fpp if fpp is None else fpp
        n, a, s, fp = self.n, self.a, self.s, self.fp
        return (n - 1) * np.arctan(fp) + np.arctan(2 * s * fpp + fp) - n * np.pi / 4 - a * s * (1 + fp**2)


def rotator_profile(n: int, a: float, s_max: float = 0.125, steps: int = 2000,
                    s0: float = 1e-3, degree: int = 4) -> ProfileSolution:
    if a > 0:
        raise ProfileError("unsupported sign: only a <= 0 is constructed")
    if not 0 < s0 < s_max:
        raise ProfileError("need 0 < s0 < s_max")
    coeffs = profile_series(n, a, degree)
    P = np.polynomial.polynomial
    s_ser = np.linspace(0.0, s0, 5)
    y0 = (P.polyval(s0, coeffs), P.polyval(s0, P.polyder(coeffs)))
    ds = (s_max - s0) / steps
    ys = _rk4(s0, y0, ds, steps, n, a)
    s_int = s0 + ds * np.arange(steps + 1)
    s_int[-1] = s_max
    fpp_int = np.array([_g_prime(s, g, n, a) for s, g in zip(s_int, ys[:, 1])])
    s_all = np.concatenate([s_ser[:-1], s_int])
    f = np.concatenate([P.polyval(s_ser[:-1], coeffs), ys[:, 0]])
    fp = np.concatenate([P.polyval(s_ser[:-1], P.polyder(coeffs)), ys[:, 1]])
    fpp = np.concatenate([P.polyval(s_ser[:-1], P.polyder(coeffs, 2)), fpp_int])
    return ProfileSolution(n, a, s_all, f, fp, fpp, s0, coeffs)


# ------------------------------------------------------------ potentials

def build_rotated_rotator(p: ProfileSolution, grid: GridSpec) -> GridFunction:
    """``ubar(xbar) = f(|xbar|^2/2)`` on ``grid``."""
    if grid.n != p.n:
        raise ProfileError("grid dimension differs from profile dimension")
    r2 = np.sum(grid.coords() ** 2, axis=-1)
    if r2.max() / 2 > p.s_max * (1 + 1e-12):
        raise ProfileError(f"grid reaches s={r2.max() / 2:.4g} beyond profile range {p.s_max:.4g}")
    return GridFunction(grid, p(r2 / 2))


@dataclass(eq=False)
class SingularRotator:
    ubar: GridFunction
    Ubar: GridFunction
    u: GridFunction

    @property
    def U(self) -> GridFunction:
        x = self.u.spec.coords()
        return GridFunction(self.u.spec, S45 * self.u.values + 0.5 * C45 * np.sum(x**2, axis=-1))


def build_singular_rotator(p: ProfileSolution, grid: GridSpec, primal_h: Optional[float] = None,
                           shrink: float = 1.0, threads: int = 1) -> SingularRotator:
    """Inverse-rotate the rotated rotator into the singular solution of the rotator equation.

    ``Ubar = -s*ubar + (c/2)|xbar|^2`` vanishes to fourth order at the origin,
    so strict convexity is required only away from the origin node.
    """
    if p.a >= 0:
        raise ProfileError("singular rotator needs a < 0")
    ubar = build_rotated_rotator(p, grid)
    Ub = aux_rotated(ubar)
    u = inverse_rotate(ubar, primal_h=primal_h, min_eig=0.0, exclude_radius=1.5 * grid.h, shrink=shrink,
                      cover="ball", threads=threads)
    return SingularRotator(ubar, Ub, u)


def quartic_coefficient(Ubar: GridFunction, radius: float) -> float:
    """Least-squares fit ``Ubar ~ K |xbar|^4`` over nodes within ``radius``."""
    r = np.linalg.norm(Ubar.spec.coords(), axis=-1)
    m = r <= radius
    r4 = r[m] ** 4
    return float(np.dot(r4, Ubar.values[m]) / np.dot(r4, r4))


# ------------------------------------------------------------ self-similar order

@dataclass
class OrderFit:
    slope: float
    radii: np.ndarray
    sup_residual: np.ndarray
    exactly_zero: bool


def _quad_parts(Q: np.ndarray, cubic: Optional[np.ndarray]):
    Q = np.asarray(Q, float)
    n = Q.shape[0]
    T = np.zeros((n, n, n)) if cubic is None else np.asarray(cubic, float)

    def value(x):
        return 0.5 * np.sum(x * (x @ Q), axis=-1) + np.einsum("ijk,...i,...j,...k->...", T, x, x, x)

    def grad(x):
        return x @ Q + np.einsum("ijk,...j,...k->...i", T + np.transpose(T, (1, 0, 2)) + np.transpose(T, (1, 2, 0)), x, x)

    def hess(x):
        S = T + np.transpose(T, (0, 2, 1)) + np.transpose(T, (1, 0, 2)) + np.transpose(T, (1, 2, 0)) \
            + np.transpose(T, (2, 0, 1)) + np.transpose(T, (2, 1, 0))
        return Q + np.einsum("ijk,...k->...ij", S, x)

    return value, grad, hess


def self_similar_residual_order(Q, b: float, radii: Sequence[float], cubic=None,
                                include_angle: bool = False, samples: int = 2001,
                                seed: int = 0) -> OrderFit:
    """Order at which the self-similar term perturbs a quadratic-plus-cubic background.

    ``Q`` is the Hessian of the quadratic part and ``cubic`` a symmetric or
    plain tensor ``T`` giving ``sum T_ijk x_i x_j x_k``. The residual is
    ``-b (x.Dubar - 2 ubar)`` (the self-similar correction on top of a
    special Lagrangian background); ``include_angle=True`` adds
    ``theta(D^2 ubar) - theta(Q)`` as well. Sup norms are taken over sample
    points filling each ball, and the log-log slope is returned.
    """
    Q = np.asarray(Q, float)
    n = Q.shape[0]
    value, grad, hess = _quad_parts(Q, cubic)
    c = float(np.arctan(jacobi_eigh(Q).values).sum())
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(samples, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = rng.random(samples) ** (1.0 / n)
    unit = np.concatenate([dirs, dirs * rad[:, None]])
    radii = np.asarray(radii, float)
    sups = []
    for r in radii:
        x = unit * r
        res = -b * (np.sum(x * grad(x), axis=-1) - 2 * value(x))
        if include_angle:
            res = res + np.arctan(jacobi_eigh(hess(x)).values).sum(axis=-1) - c
        sups.append(np.max(np.abs(res)))
    sups = np.asarray(sups)
    if np.all(sups == 0):
        return OrderFit(np.inf, radii, sups, True)
    slope = np.polyfit(np.log(radii), np.log(sups), 1)[0]
    return OrderFit(float(slope), radii, sups, False)

import numpy as np
import pytest

from lagmc.convex import S45, aux_rotated
from lagmc.grid import GridSpec, hessian_field, jacobi_eigh
from lagmc.phase import PhaseSpec
from lagmc.profiles import (
    BranchError,
    ProfileError,
    _rk4,
    build_rotated_rotator,
    build_singular_rotator,
    profile_series,
    quartic_coefficient,
    rotator_profile,
    self_similar_residual_order,
)
from lagmc.solver import residual_field, rotated_residual_field


def test_a_zero_is_identity():
    for n in (1, 2, 3):
        p = rotator_profile(n, 0.0)
        assert np.abs(p.f - p.s).max() <= 1e-14
        assert np.abs(p.fp - 1).max() <= 1e-14


@pytest.mark.parametrize("n,a", [(1, -1.0), (2, -0.5), (3, -0.25)])
def test_curvature_at_origin(n, a):
    p = rotator_profile(n, a)
    assert p.fpp[0] == pytest.approx(4 * a / (n + 2), abs=1e-10)
    assert np.abs(p.ode_residual()[1:]).max() <= 1e-8


def test_curvature_linear_in_a():
    for n in (1, 2, 3):
        vals = [rotator_profile(n, a).fpp[0] for a in (-1.0, -0.5, -0.1)]
        assert np.allclose(vals, [4 * a / (n + 2) for a in (-1.0, -0.5, -0.1)], atol=1e-10)


def test_quartic_ansatz_residual_order():
    n, a = 2, -0.5
    s = np.geomspace(1e-3, 1e-2, 5)
    fp = 1 + 4 * a / (n + 2) * s
    fpp = np.full_like(s, 4 * a / (n + 2))
    res = (n - 1) * np.arctan(fp) + np.arctan(2 * s * fpp + fp) - n * np.pi / 4 - a * s * (1 + fp**2)
    slope = np.polyfit(np.log(s), np.log(np.abs(res)), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_series_handoff_continuity():
    n, a = 2, -0.5
    p = rotator_profile(n, a)
    c = profile_series(n, a)
    P = np.polynomial.polynomial
    s0, d = p.s0, 1e-5
    y = _rk4(s0 - d, (P.polyval(s0 - d, c), P.polyval(s0 - d, P.polyder(c))), d, 1, n, a)[-1]
    assert abs(y[0] - P.polyval(s0, c)) <= 1e-9
    assert abs(y[1] - P.polyval(s0, P.polyder(c))) <= 1e-9


def test_profile_matches_fine_integration():
    p = rotator_profile(1, -1.0)
    fine = rotator_profile(1, -1.0, steps=20000)
    assert float(p(0.02)) == pytest.approx(float(fine(0.02)), abs=1e-7)


def test_profile_errors():
    with pytest.raises(ProfileError, match="unsupported sign"):
        rotator_profile(1, 0.5)
    with pytest.raises(BranchError):
        rotator_profile(1, -1.0, s_max=5.0)
    p = rotator_profile(1, -1.0)
    with pytest.raises(ProfileError):
        p(1.0)
    with pytest.raises(ProfileError):
        build_rotated_rotator(p, GridSpec.centered(1, 1.0, 0.1))


def test_rotated_rotator_a_zero():
    p = rotator_profile(2, 0.0)
    ubar = build_rotated_rotator(p, GridSpec.centered(2, 0.34, 0.02))
    x = ubar.spec.coords()
    assert np.abs(ubar.values - 0.5 * np.sum(x**2, -1)).max() <= 1e-12
    res = rotated_residual_field(ubar, PhaseSpec.rotator(2, np.pi, 0.0))
    assert np.abs(res.values).max() <= 1e-10


def test_rotated_rotator_small_radius_spectrum():
    n, a = 2, -0.5
    p = rotator_profile(n, a)
    ubar = build_rotated_rotator(p, GridSpec.centered(n, 0.1, 0.005))
    H = hessian_field(ubar)
    x = ubar.spec.interior_coords()
    k = a / (2 * (n + 2))
    r2 = np.sum(x**2, -1)[..., None, None]
    ansatz = np.eye(n) + k * (4 * r2 * np.eye(n) + 8 * x[..., :, None] * x[..., None, :])
    # next term is O(|x|^4) plus O(h^2) from differencing
    assert np.abs(H - ansatz).max() <= 1e-3
    lam = jacobi_eigh(H).values
    assert np.all(lam <= 1 + 1e-12)


@pytest.mark.parametrize("n,a,radius,h", [(1, -1.0, 0.49, 1e-3), (2, -0.5, 0.34, 1e-2)])
def test_aux_rotated_convex_away_from_origin(n, a, radius, h):
    ubar = build_rotated_rotator(rotator_profile(n, a), GridSpec.centered(n, radius, h))
    Ub = aux_rotated(ubar)
    lam = jacobi_eigh(hessian_field(Ub)).values[..., 0]
    r = np.linalg.norm(Ub.spec.interior_coords(), axis=-1)
    assert np.all(lam[r >= 2 * h] > 0)


@pytest.mark.parametrize("n,a,radius,h", [(1, -1.0, 0.49, 1e-3), (2, -0.5, 0.34, 1e-2), (3, -0.25, 0.28, 1e-2)])
def test_quartic_coefficient(n, a, radius, h):
    ubar = build_rotated_rotator(rotator_profile(n, a), GridSpec.centered(n, radius, h))
    K = quartic_coefficient(aux_rotated(ubar), 0.1)
    assert K == pytest.approx(-a * S45 / (2 * (n + 2)), rel=0.05)


def test_singular_rotator_rejects_nonnegative_a():
    with pytest.raises(ProfileError):
        build_singular_rotator(rotator_profile(1, 0.0), GridSpec.centered(1, 0.3, 0.01))


@pytest.mark.parametrize("n,a,radius,h,hp", [(1, -1.0, 0.49, 1e-3, 1e-3), (2, -0.5, 0.34, 1e-2, 1e-3)])
def test_singular_rotator_full_equation(n, a, radius, h, hp):
    sr = build_singular_rotator(rotator_profile(n, a), GridSpec.centered(n, radius, h), primal_h=hp)
    u = sr.u
    res = residual_field(u, PhaseSpec.rotator(n, n * np.pi / 2, a)).values
    R = -u.spec.lo[0]
    far = np.linalg.norm(u.spec.coords(), axis=-1) >= 0.25 * R
    assert np.abs(res[far]).max() <= h


def test_self_similar_examples():
    fit = self_similar_residual_order(np.eye(2), 0.7, [0.1, 0.05, 0.025])
    assert fit.exactly_zero
    fit = self_similar_residual_order(np.diag([1.0, 2.0]), 1.0, [0.1, 0.05, 0.025],
                                      cubic=_cubic_x1(2, 0.1))
    assert fit.slope >= 2.8


def _cubic_x1(n, c):
    T = np.zeros((n, n, n))
    T[0, 0, 0] = c
    return T


@pytest.mark.parametrize("b", [-1.0, 0.3, 2.0])
def test_quadratic_solves_self_similar_for_every_b(b):
    Q = np.array([[1.0, 0.4], [0.4, 3.0]])
    fit = self_similar_residual_order(Q, b, [0.2, 0.1], include_angle=True)
    assert fit.exactly_zero or np.all(fit.sup_residual <= 1e-14)

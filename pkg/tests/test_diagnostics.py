import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagmc.convex import covering_dual_spec, legendre_pair, slope_range
from lagmc.diagnostics import (
    DiagnosticError,
    dual_convexity_check,
    geometric_radii,
    holder_exponent_fit,
    local_oscillation,
    rank_field,
    vmo_modulus,
)
from lagmc.grid import GridFunction, GridSpec

from conftest import power, quad, sample


def test_holder_quadratic_2d():
    u = sample(2, 1.0, 0.01, quad(np.eye(2)))
    fit = holder_exponent_fit(u, [0.0, 0.0], geometric_radii(0.05, 0.5))
    assert fit.exponent == pytest.approx(2.0, abs=0.02)


def test_holder_three_halves_2d():
    u = sample(2, 1.0, 0.005, power(1.5))
    fit = holder_exponent_fit(u, [0.0, 0.0], geometric_radii(0.05, 0.5))
    assert fit.exponent == pytest.approx(1.5, abs=0.02)


@pytest.mark.parametrize("g", [4 / 3, 1.5, 2.0, 3.0])
def test_holder_power_family(g):
    u = sample(1, 1.0, 1e-4, power(g))
    fit = holder_exponent_fit(u, [0.0], geometric_radii(0.01, 0.5))
    assert fit.exponent == pytest.approx(g, abs=0.02)
    assert fit.residual <= 0.05


def test_holder_affine_invariant():
    u = sample(1, 1.0, 1e-3, power(1.5))
    v = u.with_values(u.values + 3.0 - 2.0 * u.spec.coords()[..., 0])
    assert local_oscillation(u, [0.0], 0.3) == pytest.approx(local_oscillation(v, [0.0], 0.3), rel=1e-9)


def test_holder_needs_radii():
    u = sample(1, 1.0, 0.01, power(2.0))
    with pytest.raises(DiagnosticError):
        holder_exponent_fit(u, [0.0], [0.1, 0.2, 5.0, 6.0])


def _field(R, h, fn):
    g = np.arange(-R, R + h / 2, h)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1)
    return fn(X)


def test_vmo_constant_field_zero():
    H = _field(0.2, 0.01, lambda X: np.broadcast_to(np.array([[1.0, 0.3], [0.3, 2.0]]), X.shape[:-1] + (2, 2)))
    assert np.all(vmo_modulus(H, 0.01, [0.02, 0.05, 0.1]) == 0)


def test_vmo_jump_not_vanishing():
    h = 0.005
    E = np.zeros((2, 2))
    E[0, 0] = 1.0
    H = _field(0.2, h, lambda X: np.sign(X[..., 0])[..., None, None] * E)
    w = vmo_modulus(H, h, np.array([2, 4, 8, 16]) * h)
    assert w.min() >= 0.5  # half-ball average deviation of a +-1 jump


def test_vmo_power_rate():
    h = 0.002
    H = _field(0.2, h, lambda X: (np.linalg.norm(X, axis=-1) ** 0.3)[..., None, None] * np.eye(2))
    radii = np.array([8, 12, 18, 27]) * h
    w = vmo_modulus(H, h, radii)
    assert np.all(np.diff(w) > 0)
    rate = np.polyfit(np.log(radii), np.log(w), 1)[0]
    assert rate == pytest.approx(0.3, abs=0.05)


@given(st.floats(0.01, 100.0), st.integers(0, 1000))
def test_vmo_scale_normalized(t, seed):
    H = np.random.default_rng(seed).normal(size=(15, 15, 2, 2))
    radii = [0.2, 0.3]
    a = vmo_modulus(H, 0.1, radii)
    b = vmo_modulus(t * H, 0.1, radii)
    assert np.allclose(b, t * a, rtol=1e-12, atol=0)


def test_vmo_radius_validation():
    H = np.zeros((11, 11, 2, 2))
    with pytest.raises(DiagnosticError):
        vmo_modulus(H, 0.1, [0.05])
    with pytest.raises(DiagnosticError):
        vmo_modulus(H, 0.1, [0.6])


def test_rank_examples():
    r = rank_field(sample(2, 1.0, 0.05, lambda x: 0.5 * x[..., 0] ** 2))
    assert r.constant and np.all(r.rank == 1)
    r = rank_field(sample(3, 0.5, 0.05, quad(np.eye(3))))
    assert r.constant and np.all(r.rank == 3)


def test_rank_quartic_nonconstant():
    u = sample(2, 1.0, 0.05, lambda x: np.sum(x**2, -1) ** 2 / 4)
    r = rank_field(u)
    assert not r.constant
    x = u.spec.interior_coords()
    rho = np.linalg.norm(x, axis=-1)
    assert r.rank[rho < 1e-12].item() == 0
    # both eigenvalues |x|^2 and 3|x|^2 clear the floor 10h once |x|^2 > 10h (+ h^2 differencing error)
    assert np.all(r.rank[rho**2 > 10 * u.spec.h + 2 * u.spec.h**2] == 2)
    assert r.boundary


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_rank_affine_invariant(a, b, c):
    u = sample(2, 1.0, 0.1, lambda x: np.sum(x**2, -1) ** 2 / 4 + 0.5 * x[..., 0] ** 2)
    x = u.spec.coords()
    v = u.with_values(u.values + a + b * x[..., 0] + c * x[..., 1])
    assert np.array_equal(rank_field(u).rank, rank_field(v).rank)


def test_exponent_duality():
    beta = 0.5
    u = sample(1, 1.0, 1e-4, power(1 + beta))
    fp = holder_exponent_fit(u, [0.0], geometric_radii(0.01, 0.5)).exponent
    d = covering_dual_spec(*slope_range(u), 1e-3)
    dual = legendre_pair(u, d, method="hull", refine=True).dual
    fq = holder_exponent_fit(dual, [0.0], geometric_radii(0.02, 0.5)).exponent
    assert (fp - 1) * (fq - 1) == pytest.approx(1.0, abs=0.05)


def test_dual_quadratic_strongly_convex_2d():
    rep = dual_convexity_check(sample(2, 1.0, 2e-3, quad(np.eye(2))), 0.5, 0.5, dual_h=0.02)
    assert rep.strongly_convex and rep.consistent
    assert rep.min_eigenvalue == pytest.approx(1.0, abs=1e-6)


def test_dual_off_borderline_2d():
    rep = dual_convexity_check(sample(2, 1.0, 2e-3, power(1.8)), 0.5, 0.8, dual_h=0.02)
    assert not rep.strongly_convex and rep.consistent
    assert rep.flatness == pytest.approx(2.25, abs=0.05)
    assert "no contradiction" in rep.verdict


def test_dual_coarse_grid_error():
    with pytest.raises(DiagnosticError):
        dual_convexity_check(sample(1, 1.0, 0.1, quad(np.eye(1))), 0.5, 0.5)

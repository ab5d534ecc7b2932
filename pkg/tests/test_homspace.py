from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bch3, series_logm
from wfcones.algebra import AlgebraElement, AlgebraError, GroupElement, InjectivityRadiusError, classify
from wfcones.algebra import Covector
from wfcones.homspace import (
    ChartRadiusError,
    ZeroProjection,
    c_omega,
    chart_map,
    half_density_character,
    has_invariant_density,
    phase_derivative,
    product_chart_jacobian,
    sample_points,
    sigma_uniform_bound,
    stabilizer_point,
    y_x_field,
)
from wfcones.realizations import SL2_H, SL2_J, borel_sl2, builtin_space, nilradical_sl2, sl2, whole

ALG = sl2()
UNIT = 1 / math.sqrt(2)  # covector (0,0,UNIT) has unit dual norm


def cov(c, alg=ALG):
    return Covector(alg, np.asarray(c, float))


def el(c, alg=ALG):
    return AlgebraElement(alg, np.asarray(c, float))


# --- stabilizer points ---------------------------------------------------------------


def test_stabilizer_point_at_identity():
    space = borel_sl2()
    pt = stabilizer_point(space, np.eye(2))
    F = ALG.gram
    P = pt.gx_basis.T @ pt.gx_basis @ F
    Q = space.sub.T @ np.linalg.solve(space.sub @ F @ space.sub.T, space.sub @ F)
    assert np.abs(P - Q).max() < 1e-12


@pytest.mark.parametrize("name", ["SL2/N", "SL2/B", "SL2/T", "SL2^2/diag", "SU2/T", "Sp4/Sp2"])
def test_stabilizer_point_invariants(name):
    space = builtin_space(name)
    alg = space.algebra
    F = alg.gram
    for pt in sample_points(space, 40, seed=1):
        assert pt.k == space.dim_h
        assert np.abs(pt.gx_basis @ F @ pt.perp_basis.T).max() < 1e-10
        assert np.abs(pt.frame() @ F @ pt.frame().T - np.eye(alg.dim)).max() < 1e-10
        # Ad(g_x^-1) maps g_x back into h
        back = pt.gx_basis @ alg.Ad_matrix(np.linalg.inv(pt.g_x.matrix)).T
        hs = space.sub
        proj = back @ F @ hs.T @ np.linalg.solve(hs @ F @ hs.T, hs)
        assert np.abs(back - proj).max() < 1e-9


def test_sl2n_stabilizers_are_nilpotent():
    for pt in sample_points(nilradical_sl2(), 200, seed=2):
        assert pt.k == 1
        x, y, z = pt.gx_basis[0]
        # det X = z^2 - x^2 - y^2 is the well-conditioned invariant
        assert abs(z * z - x * x - y * y) < 1e-12 * (x * x + y * y + z * z)
        # eigenvalues of a rounded nilpotent scale like sqrt(roundoff): cluster at 1e-5
        assert classify(el(pt.gx_basis[0]), eig_tol=1e-5).kind == "nilpotent"


# --- densities ---------------------------------------------------------------------------


def test_invariant_density_nilradical():
    rep = has_invariant_density(nilradical_sl2())
    assert rep.invariant and rep.max_log_defect < 1e-10


def test_invariant_density_borel_fails_with_modular_exponent():
    rep = has_invariant_density(borel_sl2())
    assert not rep.invariant
    # h = exp(tH) = diag(a, 1/a) with a = e^t acts on g/b by a^-2
    assert rep.modular_exponents[0] == pytest.approx(-2.0, abs=1e-8)
    assert rep.modular_exponents[1] == pytest.approx(0.0, abs=1e-8)


def test_invariant_density_whole_group():
    assert has_invariant_density(whole(ALG)).invariant


def test_half_density_character_zero():
    pt = stabilizer_point(borel_sl2(), np.eye(2))
    assert half_density_character(borel_sl2(), pt, np.zeros(3)) == 1.0


@pytest.mark.parametrize("t", [-1.0, -0.3, 0.2, 0.9])
def test_half_density_character_borel_closed_form(t):
    space = borel_sl2()
    pt = stabilizer_point(space, np.eye(2))
    assert half_density_character(space, pt, t * SL2_H, alpha=0.5) == pytest.approx(math.exp(t), rel=1e-8)
    assert half_density_character(space, pt, t * SL2_H, alpha=1.0) == pytest.approx(math.exp(2 * t), rel=1e-8)


@pytest.mark.parametrize("s", [-2.0, 0.5, 3.0])
def test_half_density_character_nilradical(s):
    space = nilradical_sl2()
    for pt in sample_points(space, 10, seed=3):
        assert half_density_character(space, pt, pt.local([s])) == pytest.approx(1.0, abs=1e-8)


def test_half_density_character_rejects_outside_gx():
    space = borel_sl2()
    pt = stabilizer_point(space, np.eye(2))
    with pytest.raises(AlgebraError):
        half_density_character(space, pt, SL2_J)


def test_sigma_conjugation_identity():
    """The character at x equals the one at eH evaluated on Ad(g_x^-1) y."""
    space = borel_sl2()
    base = stabilizer_point(space, np.eye(2))
    rng = np.random.default_rng(4)
    for pt in sample_points(space, 30, seed=5):
        y = pt.local(0.5 * rng.standard_normal(2))
        y0 = ALG.Ad_matrix(np.linalg.inv(pt.g_x.matrix)) @ y
        a = half_density_character(space, pt, y)
        b = half_density_character(space, base, y0)
        assert a == pytest.approx(b, rel=1e-8)


def test_sigma_uniform_bound_matches_eigenvalue_bound():
    # unit traceless 2x2 matrices have |eigenvalue| <= 1/sqrt(2), so on g/g_x
    # |det Ad(e^y)|^(-1/2) <= exp(|y| / sqrt(2)) uniformly in x
    space = borel_sl2()
    R = 0.3
    bound = math.exp(R / math.sqrt(2))
    small = sigma_uniform_bound(space, sample_points(space, 50, seed=1), R, 16, seed=2)
    large = sigma_uniform_bound(space, sample_points(space, 400, seed=1), R, 16, seed=2)
    assert small <= bound + 1e-12 and large <= bound + 1e-12
    assert large >= 0.999 * bound
    assert abs(large - small) < 1e-3 * bound


# --- Y_x and the phase derivative ---------------------------------------------------------


def test_y_x_already_in_gx():
    space = borel_sl2()
    pt = stabilizer_point(space, np.eye(2))
    # covector H has Riesz representative H, which lies in b
    y, p = y_x_field(pt, cov(SL2_H))
    assert y.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(y.coords, SL2_H / ALG.norm(SL2_H), atol=1e-12)
    assert p == pytest.approx(ALG.norm(SL2_H), abs=1e-12)


def test_y_x_zero_projection():
    # covector H restricts to zero on n
    pt = stabilizer_point(nilradical_sl2(), np.eye(2))
    with pytest.raises(ZeroProjection):
        y_x_field(pt, cov(SL2_H))


def test_phase_derivative_at_identity_is_pairing():
    rng = np.random.default_rng(6)
    for _ in range(20):
        xi, y = cov(rng.standard_normal(3)), el(rng.standard_normal(3))
        val, err = phase_derivative(xi, y, ALG.identity())
        exact = float(xi.coords @ ALG.trace_gram @ y.coords)
        assert abs(val - exact) < 1e-10 * max(1, abs(exact))
        assert err < 1e-8


def test_mu_of_y_x_is_projection_norm():
    space = nilradical_sl2()
    eta = cov([0.2, -0.4, UNIT])
    for pt in sample_points(space, 30, seed=7):
        y, p = y_x_field(pt, eta)
        mu, _ = phase_derivative(eta, y, ALG.identity())
        assert abs(abs(mu) - p) < 1e-8


def test_phase_derivative_linear_and_self_consistent():
    rng = np.random.default_rng(8)
    w = rng.standard_normal(3)
    g = GroupElement(series_expm(0.2 * ALG.matrix(w / ALG.norm(w))), ALG)
    y = el(rng.standard_normal(3))
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    va, ea = phase_derivative(cov(a), y, g)
    vb, eb = phase_derivative(cov(b), y, g)
    vab, eab = phase_derivative(cov(2 * a - 3 * b), y, g)
    assert abs(vab - (2 * va - 3 * vb)) < 1e-10 * max(1, abs(vab)) + 5 * (ea + eb + eab)
    # two step sizes agree to the extrapolated order
    v1, _ = phase_derivative(cov(a), y, g, step=1e-4)
    v2, _ = phase_derivative(cov(a), y, g, step=2e-4)
    assert abs(v1 - v2) < 1e-8
    # against the series logarithm
    T = ALG.trace_gram
    h = 1e-4
    f = lambda s: a @ T @ ALG.coords(series_logm(series_expm(s * y.matrix) @ g.matrix), check=False)
    fd = (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h)
    assert abs(v1 - fd) < 1e-7


def series_expm(A):
    from oracles import taylor_expm

    return taylor_expm(A)


def test_phase_derivative_injectivity_guard():
    g = GroupElement(series_expm(3.0 * ALG.matrix(SL2_J)), ALG)
    with pytest.raises(InjectivityRadiusError):
        phase_derivative(cov(SL2_H), el(SL2_H), g)


# --- product chart --------------------------------------------------------------------------


def test_product_chart_jacobian_at_origin():
    pt = stabilizer_point(nilradical_sl2(), np.eye(2))
    assert product_chart_jacobian(pt, np.zeros(3), np.zeros(3)) == pytest.approx(1.0, abs=1e-8)


def _bch_jacobian(pt, u0, step=1e-6):
    frame = pt.frame()
    k = pt.k

    def m(u):
        Y = ALG.matrix(u[:k] @ frame[:k])
        Z = ALG.matrix(u[k:] @ frame[k:])
        return frame @ ALG.gram @ ALG.coords(bch3(Y, Z), check=False)

    d = len(u0)
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (m(u0 + e) - m(u0 - e)) / (2 * step)
    return abs(np.linalg.det(J))


@pytest.mark.parametrize("name", ["SL2/N", "SL2/B", "SL2/T"])
def test_product_chart_jacobian_matches_bch(name):
    space = builtin_space(name)
    rng = np.random.default_rng(9)
    for pt in sample_points(space, 8, seed=10, r_range=(0, 0.5)):
        a = rng.standard_normal(pt.k)
        b = rng.standard_normal(3 - pt.k)
        u = np.r_[a, b]
        u *= 0.05 / np.linalg.norm(u)
        y, z = pt.local(u[: pt.k]), u[pt.k :] @ pt.perp_basis
        J = product_chart_jacobian(pt, y, z)
        assert abs(J - _bch_jacobian(pt, u)) < 1e-4
        assert abs(J - 1.0) < 0.05
        assert np.allclose(chart_map(pt, u), u, atol=0.05**2)


def test_product_chart_jacobian_positive_on_chart():
    pt = stabilizer_point(borel_sl2(), np.eye(2))
    rng = np.random.default_rng(11)
    for _ in range(50):
        u = rng.standard_normal(3)
        u *= rng.uniform(0, 0.24) / np.linalg.norm(u)
        assert product_chart_jacobian(pt, pt.local(u[:2]), u[2:] @ pt.perp_basis) > 0


def test_product_chart_radius_guard():
    pt = stabilizer_point(borel_sl2(), np.eye(2))
    with pytest.raises(ChartRadiusError):
        product_chart_jacobian(pt, pt.local([1.0, 0.0]), np.zeros(3))


# --- C_Omega -------------------------------------------------------------------------------


def test_c_omega_whole_group_cauchy_schwarz():
    eta = cov([0.3, -0.4, 1.1])
    for r in (0.0, 0.1, 0.5):
        rep = c_omega(whole(ALG), eta, r)
        assert rep.c_omega == pytest.approx(eta.norm() - r, abs=1e-9)


def test_c_omega_nilradical_elliptic():
    # nilpotent lines sit at 45 degrees from the elliptic axis
    rep = c_omega(nilradical_sl2(), cov([0, 0, UNIT]), 0.1, n_x=256, seed=0)
    assert rep.c_omega >= 1e-3
    assert rep.c_omega == pytest.approx(UNIT - 0.1, abs=1e-6)
    assert rep.grid_check <= rep.worst_projection + 1e-12


def test_c_omega_nilradical_hyperbolic():
    rep = c_omega(nilradical_sl2(), cov([UNIT, 0, 0]), 0.01, n_x=256, seed=0)
    assert rep.c_omega <= 1e-2


def test_vectorchoices():
    """Y_x chosen by projection satisfies inf over the ball > C_Omega / 2."""
    space = nilradical_sl2()
    eta = cov([0.1, 0.0, UNIT])
    r = 0.1
    C = c_omega(space, eta, r, n_x=256, seed=0).c_omega
    assert C > 0
    rng = np.random.default_rng(12)
    T = ALG.trace_gram
    for pt in sample_points(space, 60, seed=13):
        y, _ = y_x_field(pt, eta)
        # sample xi in B_r(eta) in the dual norm, including the boundary
        d = rng.standard_normal((400, 3))
        d /= ALG.covector_norm(d)[:, None]
        d *= r * rng.uniform(0, 1, (400, 1)) ** (1 / 3)
        inf = np.min(np.abs((eta.coords + d) @ T @ y.coords))
        assert inf > C / 2


@given(st.floats(0.05, 0.5))
def test_c_omega_monotone_in_radius(r):
    eta = cov([0, 0, UNIT])
    a = c_omega(nilradical_sl2(), eta, r, n_x=64, seed=0, refine=False).c_omega
    b = c_omega(nilradical_sl2(), eta, r / 2, n_x=64, seed=0, refine=False).c_omega
    assert a <= b + 1e-15

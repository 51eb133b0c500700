import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from bergman_lab.errors import DomainError, MemoryBudgetError
from bergman_lab.kernel import M1Profile, build_kernel, eval_kernel
from bergman_lab.projection import (assemble_projection, default_r_grid, f_r_integrand,
                                    grid_points, ident2_residual, ident2_terms, log_f_r,
                                    opnorm_lower, opnorm_lower_dense, piecewise_bounds,
                                    polar_grid, schur_integral, schur_scan, weighted_inner)

unit = st.floats(1e-6, 1 - 1e-6)


# ---------------------------------------------------------------- identity


def test_identity_symmetric_point():
    lhs, rhs, _ = ident2_terms(0.5, 0.5)
    assert lhs == 0 and rhs == 0
    assert ident2_residual(0.5, 0.5) == 0.0


def test_identity_random_pairs(rng):
    r, s = rng.uniform(0, 1, (2, 1000))
    assert np.max(np.abs(ident2_residual(r, s))) < 1e-12
    lhs, _, _ = ident2_terms(r, s)
    assert np.all(lhs <= 0)


def test_identity_far_pair():
    lhs, _, _ = ident2_terms(0.99, 0.01)
    assert abs(ident2_residual(0.99, 0.01)) < 1e-12
    assert lhs < 0


@given(unit, unit)
def test_identity_property(r, s):
    lhs, rhs, scale = ident2_terms(r, s)
    # nonpositive up to rounding; the sum is conditioned like 1/(1-r)^2
    cond = scale / (1 - max(r, s))
    assert lhs <= 8 * np.finfo(np.longdouble).eps * cond
    assert abs(ident2_residual(r, s, relative=True)) < 1e-15 * 64


def test_identity_domain():
    with pytest.raises(DomainError):
        ident2_residual(1.0, 0.5)
    with pytest.raises(DomainError):
        ident2_residual(0.5, 0.0)


# ---------------------------------------------------------------- f_r


@pytest.mark.parametrize("r", [0.3, 0.9, 0.999])
def test_f_r_on_diagonal(r):
    assert_allclose(f_r_integrand(1.0, r, r), r / (1 - r) ** 1.5, rtol=1e-12)


@given(unit, unit, st.floats(0.1, 5.0))
def test_log_f_r_affine_in_alpha(r, s, alpha):
    base = log_f_r(0.0, r, s)
    slope = log_f_r(1.0, r, s) - base
    assert_allclose(log_f_r(alpha, r, s), base + alpha * slope, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("r", [0.6, 0.9, 0.99, 0.9999])
def test_low_piece_bound(r):
    assert piecewise_bounds(1.0, r).low <= 1 / (2 * (1 - 2 ** -0.5) ** 1.5)


def test_pieces_sum_to_direct_integral():
    pb = piecewise_bounds(1.0, 0.9)
    assert all(np.isfinite(pb.parts))
    direct, _ = integrate.quad(lambda s: f_r_integrand(1.0, 0.9, s), 0, 1,
                               points=(0.5, 0.9), limit=400, epsrel=1e-11)
    assert_allclose(pb.total, direct, rtol=1e-8)
    assert 0.5 * direct <= sum(pb.parts) <= 2 * direct
    assert_allclose(sum(pb.parts), direct, rtol=1e-8)


def test_pieces_do_not_grow():
    rows = np.array([piecewise_bounds(1.0, r).parts for r in (0.9, 0.99, 0.999, 0.9999)])
    assert np.all(rows[-1] < 2 * np.median(rows, axis=0) + 1e-300)


def test_empty_between_piece():
    assert piecewise_bounds(1.0, 0.6).between == 0.0


def test_middle_crude_bound():
    rows = [piecewise_bounds(1.0, r) for r in (0.9, 0.99, 0.999, 0.9999)]
    assert all(pb.middle <= pb.middle_crude for pb in rows)
    crude = [pb.middle_crude for pb in rows]
    # tends to 2 from above as r -> 1
    assert np.all(np.diff(crude) < 0)
    assert 2.0 < crude[-1] < 2.02


def test_piecewise_domain():
    with pytest.raises(DomainError):
        piecewise_bounds(1.0, 0.5)


# ---------------------------------------------------------------- Schur integral


@pytest.fixture(scope="module")
def small_profile():
    return M1Profile(build_kernel(1, 200), 0.5, 48)


def _schur_2d(model, r, alpha=1.0):
    # independent route: theta by the trapezoid rule, s by adaptive quadrature
    th = 2 * np.pi * np.arange(256) / 256

    def inner(s):
        m1 = 2 * np.pi * np.mean(np.abs(eval_kernel(model, r * s * np.exp(1j * th))))
        return s * m1 * math.exp(-alpha / (2 * (1 - r)) - alpha / (2 * (1 - s))) / math.pi

    val, _ = integrate.quad(inner, 0, 1, limit=200, epsabs=0, epsrel=1e-11)
    return val


@pytest.mark.parametrize("r", [0.0, 0.3, 0.5])
def test_schur_against_2d_quadrature(small_profile, r):
    assert_allclose(schur_integral(small_profile, r), _schur_2d(small_profile.model, r), rtol=1e-7)


def test_schur_origin_value(small_profile):
    assert_allclose(schur_integral(small_profile, 0.0), 3.2837043599819403, rtol=1e-9)


def test_schur_rejects_radius_beyond_profile(small_profile):
    with pytest.raises(DomainError):
        schur_integral(small_profile, 0.6)
    with pytest.raises(ValueError):
        schur_integral(small_profile, 0.1, pairing="other")


def test_schur_scan_summary(small_profile):
    sc = schur_scan(small_profile, [0.0, 0.25, 0.5])
    assert sc.sup == max(sc.values)
    assert sc.plateau_ratio >= 1
    assert_allclose(sc.growth, sc.values[-1] / sc.values[0])


def test_default_r_grid():
    g = default_r_grid(13, 3.0)
    assert g[0] == 0.0
    assert_allclose(g[-1], 0.999)
    assert np.all(np.diff(g) > 0)


# ---------------------------------------------------------------- discrete projection


@pytest.fixture(scope="module")
def model():
    return build_kernel(1, 1200)


def test_grid_area():
    for res in (16, 64):
        g = polar_grid(res)
        assert np.all(np.diff(g.nodes) > 0) and np.all(g.quad_weights > 0)
        assert_allclose(g.area_weights.sum(), 1.0, atol=1e-10)


def test_grid_domain():
    with pytest.raises(DomainError):
        polar_grid(1)


@pytest.mark.parametrize("k", [0, 1, 3, 10])
def test_reproduces_analytic_monomials(model, k):
    g = polar_grid(64, angle_factor=2)
    P = assemble_projection(model, g)
    z = grid_points(g)
    f = z ** k
    out = P.apply(f)
    inner = g.nodes < 0.9
    assert np.max(np.abs(out[inner] - f[inner])) < 1e-6


def test_conjugate_is_annihilated(model):
    g = polar_grid(32, angle_factor=2)
    P = assemble_projection(model, g)
    out = P.apply(np.conj(grid_points(g)))
    # no negative-frequency content: conj(z) is orthogonal to all analytic functions
    assert np.max(np.abs(out)) < 1e-10


def test_self_adjoint(model, rng):
    g = polar_grid(24, angle_factor=4)
    P = assemble_projection(model, g)
    shape = (g.nodes.size, g.n_angles)
    f = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    a = weighted_inner(P, P.apply(f), h)
    b = weighted_inner(P, f, P.apply(h))
    assert abs(a - b) <= 1e-8 * abs(a)


def test_dense_matches_fft_apply(model, rng):
    g = polar_grid(12, angle_factor=4)
    P = assemble_projection(model, g, dense=True)
    f = rng.standard_normal((g.nodes.size, g.n_angles))
    out = P.apply(f)
    assert_allclose(P.dense @ f.ravel(), out.ravel(), atol=1e-12 * np.abs(out).max())


def test_memory_budget(model):
    with pytest.raises(MemoryBudgetError):
        assemble_projection(model, polar_grid(64), dense=True, memory_budget=1e6)


def test_truncation_check():
    with pytest.raises(DomainError):
        assemble_projection(build_kernel(1, 10), polar_grid(16))


def test_bad_mode_and_p(model):
    g = polar_grid(8)
    with pytest.raises(DomainError):
        assemble_projection(model, g, mode="other")
    with pytest.raises(DomainError):
        assemble_projection(model, g, p=0.5)


@pytest.mark.parametrize("mode", ["half_weight", "full_weight"])
def test_l2_norm_is_one(model, mode):
    P = assemble_projection(model, polar_grid(64, angle_factor=2), mode, 2.0)
    assert opnorm_lower(P).value <= 1.05
    assert opnorm_lower(P).value >= 0.95


@pytest.mark.parametrize("mode,p", [("half_weight", 2.0), ("half_weight", 4.0), ("full_weight", 1.5)])
def test_dense_dominates_mode_bound(model, mode, p):
    P = assemble_projection(model, polar_grid(12, angle_factor=4), mode, p, dense=True)
    lo = opnorm_lower(P, 32).value
    full = opnorm_lower_dense(P, 64)
    if p == 2:
        assert_allclose(full, lo, rtol=1e-10)
    else:
        assert full >= lo * (1 - 1e-9)


def test_power_iteration_monotone_and_deterministic(model):
    P = assemble_projection(model, polar_grid(32), "full_weight", 4.0)
    a = opnorm_lower(P, 16, seed=3).value
    b = opnorm_lower(P, 40, seed=3).value
    assert b >= a
    assert opnorm_lower(P, 16, seed=3).value == a


def test_iteration_floor(model):
    with pytest.raises(DomainError):
        opnorm_lower(assemble_projection(model, polar_grid(8)), 8)

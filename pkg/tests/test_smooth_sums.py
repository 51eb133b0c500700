import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from bergman_lab import calibration as cal
from bergman_lab.errors import DomainError
from bergman_lab.kernel import h_function, integral_mean_M1, x_rho
from bergman_lab.moments import log_moments
from bergman_lab.smooth_sums import (big_psi, cesaro_ratio, hadamard, hardy_norm, n_blocks_for,
                                     phi_n_envelope, psi, upper_bound_chain, vn_block,
                                     vn_envelope_ratio, vn_norm_scaling, wphi_identity_check)


def test_psi_examples():
    assert psi(1.0) == 0.0
    assert psi(4.0) == 0.0
    assert psi(2.0) == 1.0


@given(st.floats(-5.0, 10.0), st.floats(-5.0, 10.0))
def test_step_is_monotone_and_bounded(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 <= big_psi(hi) <= big_psi(lo) <= 1.0


def test_step_plateaus():
    assert big_psi(1.0) == 1.0 and big_psi(0.3) == 1.0
    assert big_psi(2.0) == 0.0 and big_psi(7.0) == 0.0
    t = np.linspace(1.05, 1.95, 500)
    assert np.all(np.diff(big_psi(t)) < 0)


def test_step_is_flat_at_junctions():
    # all derivatives vanish: the step departs from 1 faster than any power
    for h in (1e-2, 2e-2, 4e-2):
        assert 1.0 - big_psi(1.0 + h) < h ** 6


def test_first_block():
    assert vn_block(0).as_dict() == {0: 1.0, 1: 1.0}
    f = np.arange(1.0, 9.0)
    assert_allclose(hadamard(f, vn_block(0)), [1.0, 2.0] + [0.0] * 6)


@pytest.mark.parametrize("n", range(1, 11))
def test_block_support_and_coefficients(n):
    blk = vn_block(n)
    assert blk.start == 2 ** (n - 1) and blk.stop == 2 ** (n + 1)
    k = np.arange(blk.start, blk.stop)
    assert_allclose(blk.coeffs, psi(k / 2 ** (n - 1)), rtol=0, atol=0)


def test_partition_of_unity():
    total = sum(vn_block(n).dense(5000) for n in range(14))
    assert_allclose(total[:4097], 1.0, rtol=0, atol=1e-15)


@given(st.integers(0, 3000), st.integers(0, 2 ** 31 - 1))
def test_reconstruction(degree, seed):
    g = np.random.default_rng(seed)
    f = g.standard_normal(degree + 1) + 1j * g.standard_normal(degree + 1)
    rec = sum(hadamard(f, vn_block(n)) for n in range(n_blocks_for(degree)))
    assert np.max(np.abs(rec - f)) <= 1e-12


def test_n_blocks_for():
    assert n_blocks_for(0) == 1
    assert n_blocks_for(1) == 1
    assert n_blocks_for(2) == 2
    assert n_blocks_for(1024) == 11
    with pytest.raises(DomainError):
        n_blocks_for(-1)


# ---------------------------------------------------------------- Hardy norms


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 4.0])
def test_monomial_norm(p):
    c = np.zeros(12)
    c[7] = 1.0
    assert_allclose(hardy_norm(c, p), 1.0, rtol=1e-12)


def test_first_block_l1_norm():
    # (1/2pi) int 2|cos(theta/2)| dtheta = 4/pi
    assert_allclose(hardy_norm([1.0, 1.0], 1.0, rtol=1e-10), 4 / math.pi, rtol=1e-8)


@pytest.mark.parametrize("n", [1, 4, 9])
def test_parseval(n):
    c = vn_block(n).dense()
    assert_allclose(hardy_norm(c, 2.0), math.sqrt(np.sum(c ** 2)), rtol=1e-9)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=40),
       st.floats(0.3, 3.0), st.floats(0.0, 3.0))
def test_norm_monotone_in_p(coeffs, p, dp):
    c = np.array(coeffs)
    if not np.any(np.abs(c) > 1e-6):
        return
    assert hardy_norm(c, p) <= hardy_norm(c, p + dp) * (1 + 1e-5)


def test_norm_rejects_nonpositive_p():
    with pytest.raises(DomainError):
        hardy_norm([1.0], 0.0)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_block_norm_slope(p):
    sc = vn_norm_scaling(p, range(3, 11))
    assert abs(sc.slope - sc.expected) <= 0.1


@pytest.mark.parametrize("m", [0, 2])
def test_block_envelope_stable(m):
    ratios = np.array([vn_envelope_ratio(n, m) for n in range(1, 11)])
    assert np.all(ratios < 2.0)
    assert ratios.max() / ratios.min() < 1.5


# ---------------------------------------------------------------- kernel blocks


def test_moment_ratio_laws():
    # v_{lam, log} / v_lam ~ lam^{-1/2} and v_{lam, log^2} / v_lam ~ lam^{-1}
    lam = np.logspace(2, 6, 9)
    v0 = log_moments(1.0, lam, 0)[0]
    r1 = np.exp(log_moments(1.0, lam, 1)[0] - v0) * lam ** 0.5
    r2 = np.exp(log_moments(1.0, lam, 2)[0] - v0) * lam
    for r in (r1, r2):
        assert r.max() / r.min() < 2.0


def test_envelope_block_positions(kernel_small):
    rho = 0.9
    r = rho * rho
    peak = x_rho(1.0, rho) / 2
    assert 16 < peak < 64
    left = phi_n_envelope(kernel_small, r, 4)        # [8, 32], left of the peak
    assert left.argmax == 32.0
    right = phi_n_envelope(kernel_small, r, 7)       # [64, 256], right of the peak
    assert right.argmax == 64.0
    inside = phi_n_envelope(kernel_small, r, 5)      # [16, 64] holds the peak
    assert abs(inside.argmax - peak) < 0.05 * peak
    ratio = math.exp(inside.log_value - h_function(1.0, rho, x_rho(1.0, rho)))
    assert 0.25 < ratio < 4


def test_envelope_peak_block_large_radius(kernel_mid):
    rho = 0.99
    env = phi_n_envelope(kernel_mid, rho * rho, 13)
    ratio = math.exp(env.log_value - h_function(1.0, rho, x_rho(1.0, rho)))
    assert 0.25 < ratio < 4


@pytest.mark.parametrize("r,n", [(0.5, 3), (0.9, 6), (0.81, 8)])
def test_wphi_identity(kernel_small, r, n):
    assert wphi_identity_check(kernel_small, r, n) < 1e-12


def test_wphi_identity_needs_n3(kernel_small):
    with pytest.raises(DomainError):
        wphi_identity_check(kernel_small, 0.5, 2)


@pytest.mark.parametrize("r", [0.5, 0.81, 0.9])
def test_cesaro_constant(kernel_small, r):
    ratios = [cesaro_ratio(kernel_small, r, n) for n in range(3, 8)]
    assert max(ratios) <= cal.CESARO_KAPPA


def test_chain_at_origin(kernel_small):
    ch = upper_bound_chain(kernel_small, 0.0)
    assert ch.holds
    assert_allclose(math.exp(ch.log_bound), 2 * math.pi * math.exp(kernel_small.log_coeffs[0]))


def test_chain_bounds_m1(kernel_small):
    ch = upper_bound_chain(kernel_small, 0.5)
    assert ch.holds and ch.ratio >= 1
    assert_allclose(ch.log_m1, integral_mean_M1(kernel_small, 0.5).log_value)


def test_chain_is_tight_to_a_constant(kernel_mid):
    ratios = [upper_bound_chain(kernel_mid, rho * rho).ratio for rho in (0.8, 0.9, 0.95, 0.99)]
    assert min(ratios) >= 1.0
    assert max(ratios) < 10.0

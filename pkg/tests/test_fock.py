import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate
from scipy.special import gammaln

from bergman_lab.errors import DomainError, TruncationError
from bergman_lab.fock import (build_fock_kernel, class_s_check, eval_fock_kernel, fock_log_mean,
                              fock_limit_condition_check, fock_n_max, fock_schur_integral,
                              log_fock_moments)
from bergman_lab.weights import WeightSpec

GAUSS = WeightSpec.fock_gaussian()
QUARTIC = WeightSpec.fock_monomial(4.0)


@pytest.fixture(scope="module")
def gauss_kernel():
    return build_fock_kernel(GAUSS, fock_n_max(GAUSS, 20.0))


# ---------------------------------------------------------------- class S


def test_class_gaussian():
    rep = class_s_check(GAUSS)
    assert rep.in_class
    assert np.all(rep.ratio == 0)


def test_class_quartic():
    rep = class_s_check(QUARTIC)
    assert rep.in_class
    assert np.all(rep.d3 == 0)


def test_class_cubic_fails_third_derivative():
    rep = class_s_check(WeightSpec.fock_monomial(3.0))
    assert not rep.in_class
    assert not rep.d3_nonneg
    assert rep.d1_positive and rep.d2_nonneg
    # Psi = 2 x^{3/2}: Psi''' = -(3/4) x^{-3/2}
    assert_allclose(rep.d3, -0.75 * rep.x ** -1.5, rtol=1e-13)
    assert "Psi'''>=0: FAIL" in rep.summary()


def test_class_domain():
    with pytest.raises(DomainError):
        class_s_check(GAUSS, eta=0.5)
    with pytest.raises(DomainError):
        class_s_check(GAUSS, [2.0, 1.0])
    with pytest.raises(DomainError):
        class_s_check(WeightSpec.exp_disk(1.0))


# ---------------------------------------------------------------- kernels


def test_gaussian_coefficients(gauss_kernel):
    n = np.arange(gauss_kernel.N_max + 1)
    assert_allclose(np.exp(-gauss_kernel.log_coeffs[:30]), [float(math.factorial(k)) for k in range(30)],
                    rtol=1e-10)
    assert_allclose(-gauss_kernel.log_coeffs, gammaln(n + 1), rtol=1e-14)


def test_gaussian_kernel_at_origin(gauss_kernel):
    assert eval_fock_kernel(gauss_kernel, 0.0) == 1.0


@given(st.floats(0, 20), st.floats(0, 2 * math.pi))
def test_gaussian_kernel_is_exponential(radius, angle):
    model = build_fock_kernel(GAUSS, fock_n_max(GAUSS, 20.0))
    u = radius * complex(math.cos(angle), math.sin(angle))
    val = eval_fock_kernel(model, u)
    assert abs(val - np.exp(u)) <= 1e-12 * abs(np.exp(u)) * max(1.0, math.exp(radius - u.real))


@pytest.mark.parametrize("u", [1.0, -20.0, 20.0, 15j, 3 - 4j])
def test_gaussian_kernel_values(gauss_kernel, u):
    # |K| = e^{Re u} can be much smaller than the terms, so compare on the |u| scale
    assert abs(eval_fock_kernel(gauss_kernel, u) - np.exp(u)) <= 1e-12 * math.exp(abs(u))


def test_quartic_coefficients_against_quadrature():
    model = build_fock_kernel(QUARTIC, 12)
    for n in range(13):
        m, _ = integrate.quad(lambda r: 2 * r ** (2 * n + 1) * math.exp(-2 * r ** 4), 0, np.inf,
                              epsabs=0, epsrel=1e-13, limit=200)
        assert_allclose(math.exp(-model.log_coeffs[n]), m, rtol=1e-9)


def test_quadrature_method_agrees():
    a = build_fock_kernel(QUARTIC, 8)
    b = build_fock_kernel(QUARTIC, 8, method="quadrature")
    assert_allclose(b.log_coeffs, a.log_coeffs, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("spec", [GAUSS, QUARTIC, WeightSpec.fock_monomial(3.0)])
def test_moments_log_convex(spec):
    lm = log_fock_moments(spec, np.arange(200))
    assert np.all(np.diff(lm, 2) > 0)


def test_kernel_truncation_error():
    with pytest.raises(TruncationError):
        eval_fock_kernel(build_fock_kernel(GAUSS, 20), 50.0)


def test_kernel_domain():
    with pytest.raises(DomainError):
        build_fock_kernel(WeightSpec.exp_disk(1.0), 10)
    with pytest.raises(DomainError):
        build_fock_kernel(GAUSS, 0)
    with pytest.raises(ValueError):
        build_fock_kernel(GAUSS, 10, method="other")


@pytest.mark.parametrize("rho", [0.0, 1.0, 7.5])
def test_gaussian_angular_mean(gauss_kernel, rho):
    # (1/2pi) int e^{rho cos t} dt = I_0(rho)
    from scipy.special import i0e
    assert_allclose(fock_log_mean(gauss_kernel, rho), math.log(i0e(rho)) + rho, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------- Schur integral


def test_gaussian_schur_is_two():
    t = np.linspace(0.0, 6.0, 10)
    model = build_fock_kernel(GAUSS, fock_n_max(GAUSS, 6.0 * 22.0))
    sc = fock_schur_integral(model, t)
    assert_allclose(sc.values, 2.0, rtol=1e-6)
    assert_allclose(sc.sup, 2.0, rtol=1e-6)


@pytest.mark.slow
def test_quartic_schur_plateau():
    t = np.linspace(0.0, 6.0, 7)
    model = build_fock_kernel(QUARTIC, fock_n_max(QUARTIC, 6.0 * 22.0))
    sc = fock_schur_integral(model, t)
    assert np.all(np.isfinite(sc.values))
    assert sc.plateau_ratio < 2


def test_schur_domain(gauss_kernel):
    with pytest.raises(DomainError):
        fock_schur_integral(gauss_kernel, [])
    with pytest.raises(DomainError):
        fock_schur_integral(gauss_kernel, [-1.0])


# ---------------------------------------------------------------- limit condition


def test_limit_gaussian():
    tab = fock_limit_condition_check(GAUSS, 2, [1.0, 10.0])
    assert_allclose(tab.ratios[-1], 1e-2, rtol=1e-12)


def test_limit_quartic():
    tab = fock_limit_condition_check(QUARTIC, 2, [1.0, 10.0])
    assert_allclose(tab.ratios[-1], 7.5e-5, rtol=1e-12)


def test_limit_cubic_decays():
    tab = fock_limit_condition_check(WeightSpec.fock_monomial(3.0), 3, np.logspace(0, 4, 9))
    assert tab.decays
    # phi''' / phi'^3 = 6 / (3 r^2)^3
    assert_allclose(tab.ratios, 6 / (27 * tab.radii ** 6), rtol=1e-10)


def test_limit_needs_plane_family():
    with pytest.raises(DomainError):
        fock_limit_condition_check(WeightSpec.exp_disk(1.0), 2)


def test_kernel_at_denormal_argument(gauss_kernel):
    assert eval_fock_kernel(gauss_kernel, 2.2e-309 + 1e-310j) == pytest.approx(1.0, abs=1e-15)

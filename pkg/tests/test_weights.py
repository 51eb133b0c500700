import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from bergman_lab.errors import DomainError
from bergman_lab.weights import (DerivPolynomial, DerivProduct, WeightSpec, build_Pn,
                                 check_limit_condition, check_sign_condition,
                                 differentiate_level, eval_weight, log_weight, phi,
                                 phi_derivative, weight_derivative)

EXP1 = WeightSpec.exp_disk(1.0)

# high-precision references (mpmath, 50 digits)
TRIPLE_D1_HALF = 23913.61592059509
TRIPLE_D2_HALF = 898105.12562699368
GEN_W2_OVER_W = -8.2687861011077128  # GenExpDisk(0, 1, 1), r = 0.7


def mp_weight(spec):
    if spec.family == "ExpDisk":
        return lambda x: mpmath.exp(-spec.alpha / (1 - x))
    if spec.family == "GenExpDisk":
        return lambda x: (1 - x * x) ** spec.A * mpmath.exp(-spec.B / (1 - x * x) ** spec.kappa)
    if spec.family == "TripleExpDisk":
        return lambda x: mpmath.exp(-mpmath.exp(mpmath.exp(1 / (1 - x))))
    if spec.family == "FockMonomial":
        return lambda x: mpmath.exp(-2 * x ** spec.m)
    return lambda x: mpmath.exp(-x * x)


def mp_derivative(spec, n, r):
    with mpmath.workdps(50):
        return float(mpmath.diff(mp_weight(spec), mpmath.mpf(r), n))


# ---------------------------------------------------------------- WeightSpec


def test_spec_roundtrip():
    for spec in (EXP1, WeightSpec.gen_exp_disk(0.5, 2.0, 1.5), WeightSpec.triple_exp_disk(),
                 WeightSpec.fock_monomial(3.0), WeightSpec.fock_gaussian()):
        assert WeightSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("kwargs", [dict(family="ExpDisk", alpha=0.0),
                                    dict(family="GenExpDisk", B=-1.0),
                                    dict(family="GenExpDisk", kappa=0.0),
                                    dict(family="FockMonomial", m=-2.0),
                                    dict(family="Nope")])
def test_spec_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        WeightSpec(**kwargs)


def test_from_dict_rejects_foreign_parameter():
    with pytest.raises(DomainError):
        WeightSpec.from_dict({"family": "FockGaussian", "alpha": 1.0})


# ---------------------------------------------------------------- eval_weight


def test_eval_weight_examples():
    assert_allclose(eval_weight(EXP1, 0.0), math.exp(-1), rtol=1e-15)
    assert eval_weight(WeightSpec.fock_gaussian(), 0.0) == 1.0
    assert_allclose(eval_weight(EXP1, 0.9), math.exp(-10), rtol=1e-13)


def test_log_weight_survives_underflow():
    lw = log_weight(EXP1, 1 - 1e-6)
    assert_allclose(lw, -1e6, rtol=1e-9)
    assert eval_weight(EXP1, 1 - 1e-6) == 0.0


@pytest.mark.parametrize("r", [1.0, 1.5, -0.1, float("nan")])
def test_eval_weight_domain(r):
    with pytest.raises(DomainError):
        eval_weight(EXP1, r)


def test_fock_domain_is_half_line():
    assert_allclose(eval_weight(WeightSpec.fock_gaussian(), 3.0), math.exp(-9.0))
    with pytest.raises(DomainError):
        eval_weight(WeightSpec.fock_gaussian(), -1.0)


# ---------------------------------------------------------------- phi_derivative


def test_phi_derivative_examples():
    assert_allclose(phi_derivative(EXP1, 1, 0.9), 50.0, rtol=1e-13)
    assert_allclose(phi_derivative(EXP1, 2, 0.9), 1000.0, rtol=1e-13)
    assert_allclose(phi_derivative(EXP1, 0, 0.9), phi(EXP1, 0.9))


def test_triple_derivatives_against_reference():
    t = WeightSpec.triple_exp_disk()
    assert_allclose(phi_derivative(t, 1, 0.5), TRIPLE_D1_HALF, rtol=1e-12)
    assert_allclose(phi_derivative(t, 2, 0.5), TRIPLE_D2_HALF, rtol=1e-12)
    h = 1e-6
    fd = (phi(t, 0.5 + h) - phi(t, 0.5 - h)) / (2 * h)
    assert_allclose(phi_derivative(t, 1, 0.5), fd, rtol=1e-6)


@pytest.mark.parametrize("n", range(0, 7))
def test_expdisk_closed_form(n):
    r = np.array([0.0, 0.3, 0.9, 0.999])
    expect = 0.5 * math.factorial(n) / (1 - r) ** (n + 1)
    assert_allclose(phi_derivative(EXP1, n, r), expect, rtol=1e-12)


@pytest.mark.parametrize("spec", [WeightSpec.gen_exp_disk(0.7, 1.3, 0.8),
                                  WeightSpec.triple_exp_disk(),
                                  WeightSpec.fock_monomial(3.0)])
def test_phi_derivatives_match_mpmath(spec):
    if spec.family == "FockMonomial":
        f = lambda x: x ** spec.m
    elif spec.family == "GenExpDisk":
        f = lambda x: (-spec.A / 2 * mpmath.log(1 - x * x)
                       + spec.B / (2 * (1 - x * x) ** spec.kappa))
    else:
        f = lambda x: mpmath.exp(mpmath.exp(1 / (1 - x))) / 2
    for n in range(1, 6):
        with mpmath.workdps(40):
            ref = float(mpmath.diff(f, mpmath.mpf("0.4"), n))
        assert_allclose(phi_derivative(spec, n, 0.4), ref, rtol=1e-10)


# ---------------------------------------------------------------- ledger


def test_build_pn_small_levels():
    assert build_Pn(1).render() == "-2*(d1)"
    assert build_Pn(2).render() == "4*(d1)^2 - 2*(d2)"
    assert build_Pn(2).as_dict() == {((1, 2),): 4, ((2, 1),): -2}


def test_differentiate_level_examples():
    p = DerivPolynomial.from_dict(1, {((1, 1),): -2})
    assert differentiate_level(p).as_dict() == {((2, 1),): -2}
    q = DerivPolynomial.from_dict(2, {((1, 2),): 4})
    d = differentiate_level(q)
    assert d.level == 3 and d.as_dict() == {((1, 1), (2, 1)): 8}


def test_product_level_is_checked():
    with pytest.raises(ValueError):
        DerivProduct(3, ((1, 1),), 1)


def test_polynomial_merges_and_drops_zero_terms():
    p = DerivPolynomial(2, (DerivProduct(2, ((2, 1),), 3), DerivProduct(2, ((2, 1),), -3),
                            DerivProduct(2, ((1, 2),), 1)))
    assert p.as_dict() == {((1, 2),): 1}


def _to_sympy(p, f, x):
    return sum(t.coeff * sp.Mul(*[sp.diff(f, x, j) ** m for j, m in t.exponents])
               for t in p.terms)


exponent_maps_level3 = [((1, 3),), ((1, 1), (2, 1)), ((3, 1),)]


@given(st.lists(st.integers(-9, 9), min_size=3, max_size=3))
def test_differentiate_level_matches_symbolic(coeffs):
    x = sp.Symbol("x")
    f = sp.Function("f")(x)
    p = DerivPolynomial.from_dict(3, dict(zip(exponent_maps_level3, coeffs)))
    lhs = sp.expand(_to_sympy(differentiate_level(p), f, x))
    rhs = sp.expand(sp.diff(_to_sympy(p, f, x), x))
    assert sp.simplify(lhs - rhs) == 0


@pytest.mark.parametrize("n", range(1, 9))
def test_every_product_has_its_level(n):
    p = build_Pn(n)
    for t in p.terms:
        assert sum(j * m for j, m in t.exponents) == n == t.level


@pytest.mark.parametrize("n", range(1, 9))
def test_leading_coefficient_law(n):
    p = build_Pn(n)
    assert p.coefficient(((1, n),)) == (-2) ** n
    assert p.terms[0].exponents == ((1, n),)
    assert all(t.power_of(1) <= n - 1 for t in p.terms[1:])


def test_build_pn_matches_sympy_recursion():
    x = sp.Symbol("x")
    f = sp.Function("f")(x)
    w = sp.exp(-2 * f)
    for n in range(1, 6):
        ref = sp.expand(sp.simplify(sp.diff(w, x, n) / w))
        assert sp.expand(_to_sympy(build_Pn(n), f, x) - ref) == 0


def test_expdisk_fourth_derivative_against_reference():
    # w^{(n)}/w at r = 0.5 for alpha = 1 (exact rationals)
    for n, ref in ((4, 256.0), (6, 4096.0), (8, -3145728.0)):
        val = weight_derivative(EXP1, n, 0.5) / eval_weight(EXP1, 0.5)
        assert_allclose(val, ref, rtol=1e-12)


def test_genexp_second_derivative_against_reference():
    spec = WeightSpec.gen_exp_disk(0.0, 1.0, 1.0)
    val = weight_derivative(spec, 2, 0.7) / eval_weight(spec, 0.7)
    assert_allclose(val, GEN_W2_OVER_W, rtol=1e-12)


FAMILY_CASES = [(EXP1, 0.95), (WeightSpec.exp_disk(2.5), 0.95),
                (WeightSpec.gen_exp_disk(0.5, 1.0, 1.0), 0.95),
                (WeightSpec.gen_exp_disk(-1.0, 2.0, 0.5), 0.95),
                (WeightSpec.triple_exp_disk(), 0.3),
                (WeightSpec.fock_monomial(4.0), 2.0), (WeightSpec.fock_gaussian(), 3.0)]


@pytest.mark.parametrize("spec,r_max", FAMILY_CASES, ids=lambda v: str(v))
@given(data=st.data())
def test_ledger_matches_finite_differences(spec, r_max, data):
    n = data.draw(st.integers(1, 8))
    r = data.draw(st.floats(0.05, r_max))
    ref = mp_derivative(spec, n, r)
    val = weight_derivative(spec, n, r)
    assert_allclose(val, ref, rtol=1e-4, atol=1e-300)


@pytest.mark.parametrize("n", range(1, 7))
def test_vanishing_at_boundary(n):
    k = np.arange(1, 7)
    r = 1 - 10.0 ** -k
    # compared in log space: the values underflow from k = 3 on
    log_vals = n * np.log(phi_derivative(EXP1, 1, r)) + log_weight(EXP1, r)
    assert np.all(np.diff(log_vals) < 0)


# ---------------------------------------------------------------- checks


def test_limit_condition_examples():
    assert_allclose(check_limit_condition(EXP1, 2, [0.9]).ratios[0], 0.4, rtol=1e-13)
    tab = check_limit_condition(EXP1, 2)
    assert tab.decays
    # n! (1-r)^{n-1} (2/alpha)^{n-1} at n = 2
    assert_allclose(tab.ratios, 4 * (1 - tab.radii), rtol=1e-10)
    g = check_limit_condition(WeightSpec.fock_gaussian(), 2, [100.0])
    assert_allclose(g.ratios[0], 1e-4, rtol=1e-13)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_limit_condition_closed_form(n):
    tab = check_limit_condition(EXP1, n)
    expect = math.factorial(n) * (1 - tab.radii) ** (n - 1) * 2.0 ** (n - 1)
    assert_allclose(tab.ratios, expect, rtol=1e-10)


def test_limit_condition_rejects_level_one():
    with pytest.raises(DomainError):
        check_limit_condition(EXP1, 1)


def test_sign_condition_examples():
    rep = check_sign_condition(EXP1, 1)
    assert rep.all_nonneg and rep.first_nonneg_radius == 0.0
    rep3 = check_sign_condition(EXP1, 3)
    assert rep3.all_nonneg and rep3.first_nonneg_radius < 0.99
    rep_gen = check_sign_condition(WeightSpec.gen_exp_disk(0.0, 1.0, 1.0), 2)
    assert rep_gen.all_nonneg


@pytest.mark.parametrize("n", range(1, 7))
def test_sign_condition_expdisk_tail(n):
    rep = check_sign_condition(EXP1, n)
    assert rep.all_nonneg
    tail = rep.radii >= rep.first_nonneg_radius
    assert np.all(rep.values[tail] >= 0)


def test_sign_condition_level_cap():
    with pytest.raises(DomainError):
        check_sign_condition(EXP1, 9)

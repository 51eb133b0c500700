import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from bergman_lab import calibration as cal
from bergman_lab.errors import BracketError, DomainError, TruncationError
from bergman_lab.fenchel import (inverse_lf_closed_form, inverse_lf_ratio, lf_closed_form,
                                 lf_transform, series_boundary_asymptote)


def inverse_lf_symbolic(alpha, t):
    """Largest critical value of 2 sqrt(alpha x) - log(x)/4 - x t, by sympy."""
    x = sp.Symbol("x", positive=True)
    expr = 2 * sp.sqrt(alpha * x) - sp.log(x) / 4 - x * t
    roots = sp.solve(sp.diff(expr, x), x)
    return max(float(sp.N(expr.subs(x, r), 30)) for r in roots)


def test_lf_transform_of_reciprocal():
    res = lf_transform(lambda t: 1.0 / t, 4.0)
    assert_allclose(res.value, 4.0, rtol=1e-12)
    assert_allclose(res.minimizer_t, 0.5, rtol=1e-10)
    assert res.curvature > 0


def test_lf_transform_matches_closed_form_n2():
    res = lf_transform(lambda t: 1.0 / t - 2 * math.log(t), 100.0)
    assert_allclose(res.value, lf_closed_form(1.0, 2, 100.0), rtol=1e-8)


@pytest.mark.parametrize("x", [-3.0, 0.5, 2.0])
def test_lf_transform_of_parabola(x):
    # inf_t t^2/2 + x t is attained at t = -x; on t > 0 this needs x < 0
    if x < 0:
        res = lf_transform(lambda t: 0.5 * t * t, x)
        assert_allclose(res.value, -x * x / 2, rtol=1e-10)
        assert_allclose(res.minimizer_t, -x, rtol=1e-8)
    else:
        with pytest.raises(BracketError):
            lf_transform(lambda t: 0.5 * t * t, x)


def test_lf_closed_form_examples():
    assert lf_closed_form(1.0, 0, 9.0) == 6.0
    expect = math.sqrt(5) + math.log(2 / (math.sqrt(5) + 1))
    assert_allclose(lf_closed_form(1.0, 1, 1.0), expect, rtol=1e-15)
    assert_allclose(expect, 1.7548561524401862, rtol=1e-15)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 7.0])
def test_lf_closed_form_collapses_at_n0(alpha):
    x = np.logspace(-3, 6, 30)
    assert_allclose(lf_closed_form(alpha, 0, x), 2 * np.sqrt(alpha * x), rtol=1e-15)


def test_lf_closed_form_domain():
    with pytest.raises(DomainError):
        lf_closed_form(1.0, 1, 0.0)


@given(alpha=st.floats(0.1, 10.0), n=st.integers(0, 3), logx=st.floats(-1.0, 6.0),
       logt=st.floats(-8.0, 4.0))
def test_fenchel_young(alpha, n, logx, logt):
    x, t = 10 ** logx, 10 ** logt
    v = lambda s: alpha / s - n * math.log(s)
    res = lf_transform(v, x)
    assert v(t) + x * t >= res.value - 1e-9 * abs(res.value)
    assert abs(v(res.minimizer_t) + x * res.minimizer_t - res.value) <= 1e-12 * abs(res.value)
    assert_allclose(res.value, lf_closed_form(alpha, n, x), rtol=1e-8)


def test_curvature_law():
    x = np.logspace(2, 6, 41)
    h = 1e-3 * x
    d2 = (lf_closed_form(1.0, 2, x + h) - 2 * lf_closed_form(1.0, 2, x)
          + lf_closed_form(1.0, 2, x - h)) / h ** 2
    ratio = -d2 / x ** -1.5
    assert np.all(ratio > 0) and ratio.max() / ratio.min() < 10


# ---------------------------------------------------------------- inverse transform


def test_inverse_lf_limit_at_alpha():
    t = 1 - 1e-12
    assert_allclose(inverse_lf_closed_form(1.0, t), 0.75 - 0.5 * math.log(0.5), rtol=1e-5)


@pytest.mark.parametrize("alpha,t", [(4.0, 2.0), (1.0, 0.5), (1.0, 0.01), (2.0, 1.9)])
def test_inverse_lf_against_symbolic(alpha, t):
    assert_allclose(inverse_lf_closed_form(alpha, t), inverse_lf_symbolic(alpha, t), rtol=1e-13)


def test_inverse_lf_reference_value():
    # sqrt(8) = 2 sqrt(alpha (alpha - t)) enters at alpha = 4, t = 2
    assert_allclose(inverse_lf_closed_form(4.0, 2.0), 2.036280373096735, rtol=1e-14)


def test_inverse_lf_ratio_band():
    t = np.logspace(-4, -2, 9)
    ratio = inverse_lf_ratio(1.0, t)
    lo, hi = cal.INVERSE_LF_RATIO_BAND
    assert np.all((ratio > lo) & (ratio < hi))


@pytest.mark.parametrize("t", [0.0, 1.0, 2.0])
def test_inverse_lf_domain(t):
    with pytest.raises(DomainError):
        inverse_lf_closed_form(1.0, t)


# ---------------------------------------------------------------- series


def test_series_ratio_band_and_stabilisation():
    ratios = [series_boundary_asymptote(1.0, rho).ratio for rho in (0.9, 0.99, 0.995, 0.999)]
    lo, hi = cal.SERIES_RATIO_BAND
    assert all(lo < r < hi for r in ratios)
    assert max(ratios) / min(ratios) < 5
    assert abs(ratios[3] / ratios[1] - 1) < 0.5


def test_series_against_direct_sum():
    res = series_boundary_asymptote(1.0, 0.9)
    n = np.arange(2, 20000, dtype=float)
    terms = n ** -0.25 * np.exp(2 * np.sqrt(n)) * 0.9 ** n
    assert_allclose(res.log_sum, math.log(terms.sum()), rtol=1e-13)
    assert res.peak_index == n[np.argmax(terms)]


def test_series_single_term():
    res = series_boundary_asymptote(1.0, 1e-20, N_terms=2)
    assert_allclose(res.log_sum, -0.25 * math.log(2) + 2 * math.sqrt(2) + 2 * math.log(1e-20))


def test_series_rejects_short_cut():
    with pytest.raises(TruncationError):
        series_boundary_asymptote(1.0, 0.99, N_terms=50)

"""Legendre-Fenchel transforms ``L(x) = inf_t [v(t) + x t]`` and friends."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .errors import BracketError, DomainError, TruncationError


class LFResult(NamedTuple):
    x: float
    value: float
    minimizer_t: float
    curvature: float


def _stencil(F, s, h):
    """First and second derivatives of ``F`` at ``s`` by 5-point stencils."""
    fm2, fm1, f0, fp1, fp2 = (F(s + k * h) for k in (-2, -1, 0, 1, 2))
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return d1, d2


def lf_transform(v: Callable[[float], float], x: float, t_min: float = 1e-12,
                 t_max: float = 1e12, rtol: float = 1e-10) -> LFResult:
    """Minimise ``v(t) + x t`` over ``t`` in ``[t_min, t_max]``.

    The search runs in ``s = log t``: a coarse scan brackets the minimum,
    bounded golden-section/Brent search narrows it, and once the bracket is
    below ``1e-3`` relative width a few Newton steps with finite-difference
    derivatives polish ``t`` to ``rtol``.

    Raises
    ------
    BracketError
        If the minimum sits at the edge of the search range.

    Examples
    --------
    >>> res = lf_transform(lambda t: 1.0 / t, 4.0)
    >>> round(res.value, 12), round(res.minimizer_t, 12)
    (4.0, 0.5)
    """
    def F(s):
        t = math.exp(s)
        return v(t) + x * t

    lo, hi = math.log(t_min), math.log(t_max)
    grid = np.linspace(lo, hi, 481)
    vals = np.array([F(s) for s in grid])
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if i == 0 or i == grid.size - 1:
        raise BracketError(f"minimum not enclosed in t in [{t_min:g}, {t_max:g}]")
    a, b = grid[i - 1], grid[i + 1]
    res = optimize.minimize_scalar(F, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-3 * 1e-3})
    s = float(res.x)
    # Newton polish on F'(s) = 0
    h = 1e-3
    for _ in range(20):
        d1, d2 = _stencil(F, s, h)
        if not d2 > 0:
            break
        step = d1 / d2
        s_new = min(max(s - step, a), b)
        if abs(s_new - s) <= 0.1 * rtol:
            s = s_new
            break
        s = s_new
    if F(float(res.x)) < F(s):
        s = float(res.x)
    t = math.exp(s)
    d1, d2 = _stencil(F, s, h)
    # d^2/dt^2 of v(t) + x t in terms of s = log t
    curv = max((d2 - d1) / (t * t), 0.0)
    return LFResult(float(x), F(s), t, curv)


def lf_closed_form(alpha: float, n: int, x):
    """``L(x) = sqrt(n^2 + 4 alpha x) + n log(2x / (sqrt(n^2 + 4 alpha x) + n))``.

    This is the transform of ``alpha/t - n log t``.

    >>> lf_closed_form(1.0, 0, 9.0)
    6.0
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or alpha <= 0:
        raise DomainError("need x > 0 and alpha > 0")
    root = np.sqrt(n * n + 4.0 * alpha * x)
    if n == 0:
        out = root
    else:
        out = root + n * np.log(2.0 * x / (root + n))
    return out.item() if out.ndim == 0 else out


def inverse_lf_closed_form(alpha: float, t):
    """``u(t) = (2a + t + 2 sqrt(a(a-t))) / (4t) - log((sqrt a + sqrt(a-t)) / (2t)) / 2``.

    For ``0 < t < alpha`` this is the value of ``2 sqrt(alpha x) - log(x)/4 - x t``
    at its larger critical point, i.e. the supremum over ``x`` beyond the
    smaller one (the expression is unbounded as ``x -> 0``).
    """
    t = np.asarray(t, dtype=float)
    if alpha <= 0 or np.any(t <= 0) or np.any(t >= alpha):
        raise DomainError("need 0 < t < alpha")
    root = np.sqrt(alpha * (alpha - t))
    out = (2 * alpha + t + 2 * root) / (4 * t) \
        - 0.5 * np.log((math.sqrt(alpha) + np.sqrt(alpha - t)) / (2 * t))
    return out.item() if out.ndim == 0 else out


def inverse_lf_ratio(alpha: float, t):
    """``exp(u(t)) / (sqrt(t) exp(alpha/t))``; tends to ``alpha^(-1/4)`` as ``t -> 0``."""
    t = np.asarray(t, dtype=float)
    out = np.exp(np.asarray(inverse_lf_closed_form(alpha, t)) - 0.5 * np.log(t) - alpha / t)
    return out.item() if out.ndim == 0 else out


class SeriesAsymptote(NamedTuple):
    log_sum: float
    log_asymptote: float
    ratio: float
    n_terms: int
    peak_index: int


def _series_log_terms(alpha, rho, n):
    return -0.25 * np.log(n) + 2.0 * np.sqrt(alpha * n) + n * math.log(rho)


def series_boundary_asymptote(alpha: float, rho: float, N_terms: int | None = None,
                              tail_drop: float = 30.0,
                              max_terms: int = 50_000_000) -> SeriesAsymptote:
    """Compare ``sum_{n=2}^N n^(-1/4) exp(2 sqrt(alpha n)) rho^n`` with
    ``exp(alpha/(1-rho)) / (1-rho)``.

    With ``N_terms=None`` the cut is chosen so that the remainder is below
    ``exp(-tail_drop)`` times the largest term.  An explicit ``N_terms`` is
    checked against the same criterion.
    """
    if alpha <= 0 or not 0 < rho < 1:
        raise DomainError("need alpha > 0 and 0 < rho < 1")
    log_rho = math.log(rho)

    def slope(n):  # d/dn of the log-term; decreasing in n
        return -0.25 / n + math.sqrt(alpha / n) + log_rho

    def tail_bound(N):
        # terms beyond N shrink at least geometrically with ratio exp(slope(N))
        q = slope(N)
        if q >= 0:
            return math.inf
        lt = float(_series_log_terms(alpha, rho, N + 1))
        return lt - math.log(-math.expm1(q))

    peak = max(2, int(round(alpha / log_rho ** 2)))
    log_peak = float(np.max(_series_log_terms(alpha, rho, np.arange(max(2, peak - 2), peak + 3))))
    if N_terms is None:
        N = max(2 * peak, 8)
        while tail_bound(N) > log_peak - tail_drop:
            N *= 2
            if N > max_terms:
                raise TruncationError("term budget exceeded")
    else:
        N = int(N_terms)
        if N < 2:
            raise DomainError("N_terms must be >= 2")
        if tail_bound(N) > log_peak - tail_drop:
            raise TruncationError(f"N_terms={N} leaves a remainder above exp(-{tail_drop}) of the peak")
    n = np.arange(2, N + 1, dtype=float)
    terms = _series_log_terms(alpha, rho, n)
    log_sum = float(logsumexp(terms))
    gap = -math.expm1(log_rho)
    log_asym = alpha / gap - math.log(gap)
    return SeriesAsymptote(log_sum, log_asym, math.exp(log_sum - log_asym), N,
                           int(n[np.argmax(terms)]))

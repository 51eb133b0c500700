"""Reproducing kernel of the exponentially weighted Bergman space.

The kernel depends on ``u = z conj(zeta)`` only::

    K(u) = sum_k c_k u^k,      c_k = 1 / v_{2k+1},
    v_lam = int_0^1 r^lam exp(-alpha / (1 - r)) dr.

Coefficients are held as ``log c_k``.  For ``|u| = r`` the terms
``c_k r^k`` peak near ``k ~ alpha / (4 (1 - sqrt r)^2)`` and the sums
overflow double precision long before ``r`` reaches 1, so every evaluation
returns or works with a ``(mantissa, log_scale)`` pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from . import _backend
from .errors import ConvergenceError, DomainError, QuadratureError, TruncationError
from .moments import log_moments
from .weights import WeightSpec

LOG_2PI = math.log(2.0 * math.pi)


def _log_envelope(alpha: float, k):
    """``log((2k+1)^(3/4) exp(2 sqrt(alpha (2k+1))))``, the growth model of ``c_k``."""
    lam = 2.0 * np.asarray(k, dtype=float) + 1.0
    return 0.75 * np.log(lam) + 2.0 * np.sqrt(alpha * lam)


@dataclass(frozen=True)
class KernelModel:
    """Log-coefficient table of ``K`` with its truncation constant.

    Attributes
    ----------
    log_coeffs : ndarray
        ``log c_k`` for ``k = 0 .. N_max``.
    log_envelope_const : float
        ``max_k (log c_k - _log_envelope(k))`` over the table, the constant
        of the tail majorant used by :func:`truncation_index`.
    """

    alpha: float
    log_coeffs: np.ndarray = field(repr=False)
    tol: float
    log_envelope_const: float

    @property
    def N_max(self) -> int:
        return self.log_coeffs.size - 1

    @property
    def spec(self) -> WeightSpec:
        return WeightSpec.exp_disk(self.alpha)


def build_kernel(alpha: float, N_max: int, tol: float = 1e-12) -> KernelModel:
    """Fill ``log c_k = -log v_{2k+1}`` for ``k <= N_max`` with the batch moment kernel."""
    if N_max < 16:
        raise DomainError("N_max must be >= 16")
    if tol < 1e-12:
        raise DomainError("tol must be >= 1e-12")
    k = np.arange(N_max + 1, dtype=float)
    lv, err = log_moments(alpha, 2.0 * k + 1.0, 0, tol=0.1 * tol)
    bad = np.nonzero(~(err <= tol))[0]
    if bad.size:
        i = int(bad[0])
        raise QuadratureError(f"moment for coefficient index {i} missed tolerance",
                              best=float(lv[i]), err=float(err[i]))
    lc = -lv
    if np.any(np.diff(lc) <= 0):
        raise QuadratureError("log-coefficients are not strictly increasing")
    const = float(np.max(lc - _log_envelope(alpha, k)))
    return KernelModel(float(alpha), lc, float(tol), const)


def _tail_log_bound(alpha, const, log_r, N):
    """Log of a bound on ``sum_{k > N} C env(k) r^k`` (geometric domination)."""
    kk = N + 1.0
    lt = const + _log_envelope(alpha, kk) + kk * log_r
    # d/dk of the log majorant is decreasing; beyond kk the ratio stays below e^q
    q = 1.5 / (2 * kk + 1) + 2 * math.sqrt(alpha) / math.sqrt(2 * kk + 1) + log_r
    if q >= 0:
        return math.inf
    return lt - math.log(-math.expm1(q))


def suggest_n_max(alpha: float, r_max: float, tol: float = 1e-12, margin: float = 1.1) -> int:
    """Coefficient count needed to serve radii up to ``r_max`` at ``tol``.

    Uses the leading-order coefficient law ``c_k ~ env(k) / C_v`` with
    ``C_v = e^{-alpha/2} sqrt(pi) alpha^{1/4}`` to predict the truncation
    point before the table exists.
    """
    if not 0 <= r_max < 1:
        raise DomainError("r_max must lie in [0, 1)")
    if r_max == 0:
        return 16
    log_r = math.log(r_max)
    const = alpha / 2 - 0.5 * math.log(math.pi) - 0.25 * math.log(alpha) + math.log(2.0)
    # crude peak of the terms, then walk out until the tail is negligible
    peak = alpha / (4.0 * (1 - math.sqrt(r_max)) ** 2)
    kk = np.linspace(0, 4 * peak + 64, 4001)
    log_terms = const + _log_envelope(alpha, kk) + kk * log_r
    log_s = float(np.max(log_terms)) - math.log(2.0)
    N = max(16, int(peak))
    while _tail_log_bound(alpha, const, log_r, N) > math.log(tol) + log_s:
        N = int(N * 1.05) + 16
    return max(16, int(N * margin))


def truncation_index(model: KernelModel, r: float, tol: float | None = None) -> int:
    """Smallest ``N`` such that the majorant tail beyond ``N`` is below
    ``tol`` times ``max_k c_k r^k`` (a lower bound for the sum at ``|u| = r``).

    Raises
    ------
    TruncationError
        If the table is too short for radius ``r``.
    """
    tol = model.tol if tol is None else tol
    if not 0 <= r < 1:
        raise DomainError("radius must lie in [0, 1)")
    if r == 0:
        return 0
    log_r = math.log(r)
    lc = model.log_coeffs
    k = np.arange(lc.size, dtype=float)
    log_terms = lc + k * log_r
    log_s = float(np.max(log_terms))
    limit = math.log(tol) + log_s
    beyond = _tail_log_bound(model.alpha, model.log_envelope_const, log_r, model.N_max)
    if beyond > limit:
        raise TruncationError(
            f"model too small for radius r={r}: N_max={model.N_max}")
    major = model.log_envelope_const + _log_envelope(model.alpha, k) + k * log_r
    # tails[N] = log sum_{k > N}^{N_max} major_k, combined with the beyond-table bound
    rev = np.logaddexp.accumulate(major[::-1])[::-1]
    tails = np.empty_like(rev)
    tails[:-1] = rev[1:]
    tails[-1] = -np.inf
    tails = np.logaddexp(tails, beyond)
    ok = np.nonzero(tails < limit)[0]
    return int(ok[0])


def _as_complex(u):
    u = np.asarray(u, dtype=complex)
    return u


def eval_kernel_scaled(model: KernelModel, u, method: str = "horner", tol: float | None = None):
    """``K(u)`` as ``(mantissa, log_scale)`` with ``K = mantissa * exp(log_scale)``."""
    u = _as_complex(u)
    flat = u.ravel()
    rad = np.abs(flat)
    if np.any(rad >= 1):
        raise DomainError("|u| must be < 1")
    N = truncation_index(model, float(rad.max()) if rad.size else 0.0, tol)
    lc = np.ascontiguousarray(model.log_coeffs[:N + 1])
    with np.errstate(divide="ignore"):
        log_r = np.log(rad)
    phase = np.exp(1j * np.angle(flat))
    if method == "horner":
        mant, scale = _backend.horner_scaled(lc, np.ascontiguousarray(log_r),
                                             np.ascontiguousarray(phase))
    elif method == "naive":
        mant = np.empty(flat.shape, complex)
        scale = np.empty(flat.shape)
        k = np.arange(N + 1)
        for i, (lr, ph) in enumerate(zip(log_r, phase)):
            if not np.isfinite(lr):
                mant[i], scale[i] = 1.0, lc[0]
                continue
            la = lc + k * lr
            mx = la.max()
            mant[i] = np.sum(np.exp(la - mx) * ph ** k)
            scale[i] = mx
    else:
        raise ValueError(f"unknown method {method!r}")
    return mant.reshape(u.shape), scale.reshape(u.shape)


def eval_kernel(model: KernelModel, u, method: str = "horner", tol: float | None = None):
    """Evaluate ``K(u) = sum_k c_k u^k`` (may overflow to ``inf`` near ``|u| = 1``).

    >>> m = build_kernel(1.0, 16)
    >>> bool(np.isclose(eval_kernel(m, 0.0), np.exp(m.log_coeffs[0])))
    True
    """
    mant, scale = eval_kernel_scaled(model, u, method, tol)
    with np.errstate(over="ignore", invalid="ignore"):
        out = mant * np.exp(scale)
    return out.item() if np.ndim(out) == 0 else out


def circle_values_scaled(model: KernelModel, r: float, n_angles: int, tol: float | None = None):
    """``K(r e^{2 pi i j / n})`` for ``j < n`` as ``(mantissa array, log_scale)``.

    Coefficients ``c_k r^k`` are folded modulo ``n`` and transformed with one
    FFT, which is exact at the roots of unity.
    """
    if r == 0:
        return np.ones(n_angles, complex), float(model.log_coeffs[0])
    N = truncation_index(model, r, tol)
    k = np.arange(N + 1, dtype=float)
    la = model.log_coeffs[:N + 1] + k * math.log(r)
    mx = float(la.max())
    a = np.exp(la - mx)
    m = -(-(N + 1) // n_angles) * n_angles
    folded = np.zeros(m)
    folded[:N + 1] = a
    folded = folded.reshape(-1, n_angles).sum(axis=0)
    return np.fft.ifft(folded) * n_angles, mx


class M1Value(NamedTuple):
    log_value: float
    n_angles: int
    n_terms: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709 else math.inf


def integral_mean_M1(model: KernelModel, r: float, n_angles: int = 256,
                     rtol: float = 1e-6, max_angles: int = 2 ** 20,
                     tol: float | None = None) -> M1Value:
    """``M1(r, K) = int_0^{2 pi} |K(r e^{it})| dt`` by the trapezoid rule.

    The angle count doubles from ``n_angles`` until two successive values
    agree to ``rtol``.  Returns the log-value with the final angle and term
    counts; ``.value`` gives ``M1`` itself.
    """
    if n_angles < 256 or n_angles & (n_angles - 1):
        raise DomainError("n_angles must be a power of two >= 256")
    if not 0 <= r < 1:
        raise DomainError("radius must lie in [0, 1)")
    N = truncation_index(model, r, tol)
    if r == 0:
        return M1Value(LOG_2PI + float(model.log_coeffs[0]), n_angles, 1)
    prev = None
    n = n_angles
    while n <= max_angles:
        mant, mx = circle_values_scaled(model, r, n, tol)
        val = LOG_2PI + mx + math.log(np.mean(np.abs(mant)))
        if prev is not None and abs(math.expm1(val - prev)) < rtol:
            return M1Value(val, n, N + 1)
        prev = val
        n *= 2
    raise ConvergenceError(f"M1 at r={r} not stable within {max_angles} angles")


def m1_asymptote(alpha: float, r, log: bool = False):
    """``exp(alpha / (1 - sqrt r)) / (1 - r)^{3/2}``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r >= 1):
        raise DomainError("need 0 < r < 1")
    lv = alpha / (1.0 - np.sqrt(r)) - 1.5 * np.log1p(-r)
    out = lv if log else np.exp(lv)
    return out.item() if np.ndim(out) == 0 else out


def h_function(alpha: float, rho: float, x):
    """``h(x) = (3/4) log x + 2 sqrt(alpha x) + x log rho``."""
    x = np.asarray(x, dtype=float)
    out = 0.75 * np.log(x) + 2.0 * np.sqrt(alpha * x) + x * math.log(rho)
    return out.item() if out.ndim == 0 else out


def x_rho(alpha: float, rho: float) -> float:
    """Maximiser of :func:`h_function`: ``((sqrt(alpha + 3L) + sqrt alpha) / (2L))^2``, ``L = log(1/rho)``."""
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    L = -math.log(rho)
    return ((math.sqrt(alpha + 3 * L) + math.sqrt(alpha)) / (2 * L)) ** 2


def m1_lower_bound(model: KernelModel, r: float, log: bool = False):
    """``2 pi max_k c_k r^k``, a lower bound for ``M1(r, K)``."""
    if not 0 <= r < 1:
        raise DomainError("radius must lie in [0, 1)")
    truncation_index(model, r)
    if r == 0:
        lv = LOG_2PI + float(model.log_coeffs[0])
    else:
        k = np.arange(model.log_coeffs.size, dtype=float)
        lv = LOG_2PI + float(np.max(model.log_coeffs + k * math.log(r)))
    return lv if log else math.exp(lv)


class M1Profile:
    """Cubic spline of ``log M1(t, K)`` in ``u = -log(1 - t)`` on ``[0, t_max]``.

    Used as the radial ingredient of Schur integrals, where ``M1`` is needed
    at many radii ``t = r s``.
    """

    def __init__(self, model: KernelModel, t_max: float, n_points: int = 160,
                 rtol: float = 1e-8):
        if not 0 < t_max < 1:
            raise DomainError("t_max must lie in (0, 1)")
        self.model = model
        self.t_max = float(t_max)
        self.u = np.linspace(0.0, -math.log1p(-t_max), n_points)
        t = -np.expm1(-self.u)
        self.log_m1 = np.array([integral_mean_M1(model, float(ti), rtol=rtol).log_value
                                for ti in t])
        self._spline = CubicSpline(self.u, self.log_m1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise DomainError(f"profile covers 0 <= t <= {self.t_max}")
        out = self._spline(-np.log1p(-t))
        return out.item() if out.ndim == 0 else out


def coefficient_peak(model: KernelModel, r: float) -> int:
    """Index maximising ``c_k r^k``."""
    k = np.arange(model.log_coeffs.size, dtype=float)
    return int(np.argmax(model.log_coeffs + k * math.log(r)))


def log_partial_sum(model: KernelModel, r: float, N: int) -> float:
    """``log sum_{k <= N} c_k r^k`` for real ``r > 0``."""
    k = np.arange(N + 1, dtype=float)
    return float(logsumexp(model.log_coeffs[:N + 1] + k * math.log(r)))

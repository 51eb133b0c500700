"""Radial Fock spaces on the plane: kernels, Schur integrals, class checks.

A plane weight ``exp(-2 phi(|z|))`` has moments

    m_n = int_C |z|^{2n} exp(-2 phi) dm = 2 int_0^inf r^{2n+1} exp(-2 phi(r)) dr

with ``dm = dA / pi`` and reproducing kernel ``K(u) = sum_n u^n / m_n`` in
``u = z conj(zeta)``.  For the Gaussian ``phi = r^2/2`` this is ``e^u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError, DomainError, QuadratureError, TruncationError
from .moments import fock_moment, laplace_log_integral
from .weights import LimitTable, WeightSpec, check_limit_condition, phi

LOG_2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Class membership


class ClassSReport(NamedTuple):
    """Sign and growth verdicts for the profile ``Psi(x) = 2 phi(sqrt x)``."""

    x: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    ratio: np.ndarray
    eta: float
    d1_positive: bool
    d2_nonneg: bool
    d3_nonneg: bool
    ratio_bounded: bool

    @property
    def in_class(self) -> bool:
        return self.d1_positive and self.d2_nonneg and self.d3_nonneg and self.ratio_bounded

    def summary(self) -> str:
        flag = lambda b: "ok" if b else "FAIL"
        return (f"Psi'>0: {flag(self.d1_positive)}; Psi''>=0: {flag(self.d2_nonneg)}; "
                f"Psi'''>=0: {flag(self.d3_nonneg)}; growth ratio bounded (eta={self.eta}): "
                f"{flag(self.ratio_bounded)}; member: {self.in_class}")


def profile_derivatives(spec: WeightSpec, x):
    """Closed-form ``Psi', Psi'', Psi'''`` of ``Psi(x) = 2 phi(sqrt x)``."""
    x = np.asarray(x, dtype=float)
    if spec.family == "FockGaussian":
        one = np.ones_like(x)
        return one, 0 * one, 0 * one
    if spec.family == "FockMonomial":
        h = spec.m / 2.0
        d1 = spec.m * x ** (h - 1)
        d2 = spec.m * (h - 1) * x ** (h - 2)
        d3 = spec.m * (h - 1) * (h - 2) * x ** (h - 3)
        return d1, d2, d3
    raise DomainError("class check needs a plane family")


def class_s_check(spec: WeightSpec, x_grid: Iterable[float] | None = None,
                  eta: float = 0.0) -> ClassSReport:
    """Check ``Psi' > 0``, ``Psi'' >= 0``, ``Psi''' >= 0`` and boundedness of
    ``(2 Psi'' + x Psi''') sqrt(x) / (Psi' + x Psi'')^{1+eta}`` on ``x_grid``.

    The growth ratio counts as bounded when its log-log slope over the last
    decade of the grid is not positive.  Failing conditions are reported,
    never raised.
    """
    if not eta < 0.5:
        raise DomainError("eta must be < 1/2")
    x = np.logspace(0, 6, 61) if x_grid is None else np.asarray(list(x_grid), float)
    if x.size < 2 or np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise DomainError("x_grid must be positive and increasing")
    d1, d2, d3 = profile_derivatives(spec, x)
    ratio = (2 * d2 + x * d3) * np.sqrt(x) / (d1 + x * d2) ** (1 + eta)
    tail = x >= x[-1] / 10
    if tail.sum() < 2:
        tail[-2:] = True
    a = np.abs(ratio[tail])
    if np.all(a == 0):
        bounded = True
    else:
        slope = np.polyfit(np.log(x[tail]), np.log(np.maximum(a, 1e-300)), 1)[0]
        bounded = bool(slope <= 1e-9)
    return ClassSReport(x, d1, d2, d3, ratio, float(eta), bool(np.all(d1 > 0)),
                        bool(np.all(d2 >= 0)), bool(np.all(d3 >= 0)), bounded)


# ---------------------------------------------------------------------------
# Kernels


def log_fock_moments(spec: WeightSpec, n) -> np.ndarray:
    """Closed-form ``log m_n`` for the plane families (Gamma integrals)."""
    n = np.asarray(n, dtype=float)
    if spec.family == "FockGaussian":
        return gammaln(n + 1.0)
    if spec.family == "FockMonomial":
        a = (2.0 * n + 2.0) / spec.m
        return math.log(2.0 / spec.m) - a * math.log(2.0) + gammaln(a)
    raise DomainError("plane family required")


@dataclass(frozen=True)
class FockKernelModel:
    """``log(1/m_n)`` for ``n <= N_max``."""

    spec: WeightSpec
    log_coeffs: np.ndarray = field(repr=False)
    tol: float

    @property
    def N_max(self) -> int:
        return self.log_coeffs.size - 1


def build_fock_kernel(spec: WeightSpec, N_max: int, tol: float = 1e-12,
                      method: str = "closed") -> FockKernelModel:
    """Kernel coefficients from closed-form moments or, with
    ``method="quadrature"``, from :func:`fock_moment` one index at a time.
    """
    if not spec.is_fock:
        raise DomainError("plane family required")
    if N_max < 1:
        raise DomainError("N_max must be >= 1")
    n = np.arange(N_max + 1)
    if method == "closed":
        lm = log_fock_moments(spec, n)
    elif method == "quadrature":
        lm = np.array([fock_moment(spec, int(k), tol=tol).log_value for k in n])
    else:
        raise ValueError(f"unknown method {method!r}")
    lc = -np.asarray(lm, dtype=float)
    if N_max >= 2 and np.any(np.diff(lm, 2) < -1e-9 * np.maximum(1.0, np.abs(lm[1:-1]))):
        raise QuadratureError("moments are not log-convex")
    return FockKernelModel(spec, lc, float(tol))


def fock_n_max(spec: WeightSpec, radius: float, tol: float = 1e-12) -> int:
    """Coefficient count that serves ``|u| <= radius`` at ``tol``."""
    N = 64
    while True:
        lt = -log_fock_moments(spec, np.arange(N + 1)) + np.arange(N + 1) * math.log(max(radius, 1e-300))
        peak = int(np.argmax(lt))
        if peak < N and lt[-1] < lt[peak] + math.log(tol) - 40:
            return N
        N *= 2


def fock_truncation_index(model: FockKernelModel, radius: float, tol: float | None = None) -> int:
    """Smallest ``N`` whose geometric tail bound is below ``tol`` times the largest term.

    The terms ``radius^n / m_n`` are log-concave in ``n``, so past the peak the
    ratio of consecutive terms only decreases.
    """
    tol = model.tol if tol is None else tol
    if radius == 0:
        return 0
    lt = model.log_coeffs + np.arange(model.log_coeffs.size) * math.log(radius)
    peak = int(np.argmax(lt))
    limit = math.log(tol) + float(lt[peak])
    q = np.diff(lt[peak:])
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(q < 0, lt[peak + 1:] - np.log(-np.expm1(np.minimum(q, -1e-300))), np.inf)
    ok = np.nonzero(tail < limit)[0]
    if ok.size:
        return peak + int(ok[0])
    raise TruncationError(f"N_max={model.N_max} too small for |u|={radius}")


def eval_fock_kernel_scaled(model: FockKernelModel, u, tol: float | None = None):
    """``K(u)`` as ``(mantissa, log_scale)``."""
    u = np.asarray(u, dtype=complex)
    flat = u.ravel()
    mant = np.empty(flat.shape, complex)
    scale = np.empty(flat.shape)
    for i, z in enumerate(flat):
        rad = abs(z)
        N = fock_truncation_index(model, rad, tol)
        if rad == 0:
            mant[i], scale[i] = 1.0, model.log_coeffs[0]
            continue
        k = np.arange(N + 1)
        la = model.log_coeffs[:N + 1] + k * math.log(rad)
        mx = float(la.max())
        # Horner on the normalised coefficients
        coef = np.exp(la - mx)
        ph = np.exp(1j * np.angle(z))  # z / rad overflows for denormal rad
        acc = 0j
        for c in coef[::-1]:
            acc = acc * ph + c
        mant[i], scale[i] = acc, mx
    return mant.reshape(u.shape), scale.reshape(u.shape)


def eval_fock_kernel(model: FockKernelModel, u, tol: float | None = None):
    """``K(u) = sum_n u^n / m_n``.

    >>> m = build_fock_kernel(WeightSpec.fock_gaussian(), 80)
    >>> round(eval_fock_kernel(m, 1.0).real, 12)
    2.718281828459
    """
    mant, scale = eval_fock_kernel_scaled(model, u, tol)
    with np.errstate(over="ignore"):
        out = mant * np.exp(scale)
    return out.item() if np.ndim(out) == 0 else out


def fock_log_mean(model: FockKernelModel, rho: float, rtol: float = 1e-10,
                  n_angles: int = 64, max_angles: int = 2 ** 18) -> float:
    """``log (1/2pi) int |K(rho e^{it})| dt`` by the trapezoid rule on a
    doubling angle count; coefficients folded and transformed with one FFT.
    """
    if rho == 0:
        return float(model.log_coeffs[0])
    N = fock_truncation_index(model, rho, 0.01 * rtol)
    k = np.arange(N + 1)
    la = model.log_coeffs[:N + 1] + k * math.log(rho)
    mx = float(la.max())
    a = np.exp(la - mx)
    prev = None
    n = n_angles
    while n <= max_angles:
        size = -(-(N + 1) // n) * n
        folded = np.zeros(size)
        folded[:N + 1] = a
        vals = np.fft.ifft(folded.reshape(-1, n).sum(axis=0)) * n
        val = mx + math.log(np.mean(np.abs(vals)))
        if prev is not None and abs(math.expm1(val - prev)) < rtol:
            return val
        prev = val
        n *= 2
    raise ConvergenceError(f"angular mean at rho={rho} not stable within {max_angles} angles")


class FockSchur(NamedTuple):
    t: np.ndarray
    values: np.ndarray
    errs: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def plateau_ratio(self) -> float:
        return float(np.max(self.values) / np.median(self.values))


def fock_schur_point(model: FockKernelModel, t: float, tol: float = 1e-10) -> tuple[float, float]:
    """``I(t) = int_0^inf 2 s M(t s) exp(-phi(t) - phi(s)) ds`` with ``M`` the
    angular mean of ``|K|``; returns ``(value, relative error)``.

    The integral runs in ``x = log s`` over the window where the integrand
    is within 45 e-folds of its peak, which fixes the outer radius per ``t``.
    The model must serve ``|u| <= t (2 t + 10)``; see :func:`fock_n_max`.
    """
    spec = model.spec
    if t < 0:
        raise DomainError("t must be >= 0")
    base = -float(phi(spec, t))
    cache: dict[float, float] = {}

    def mean(rho):
        key = float(rho)
        if key not in cache:
            cache[key] = fock_log_mean(model, key)
        return cache[key]

    def G(x):
        x = np.asarray(x, dtype=float)
        s = np.exp(np.minimum(x, 60.0))
        out = np.empty(x.shape)
        for i, (xi, si) in enumerate(zip(x.ravel(), s.ravel())):
            with np.errstate(over="ignore"):
                ph = float(phi(spec, si))
            if not np.isfinite(ph) or ph > 1e6:
                out.flat[i] = -np.inf
                continue
            out.flat[i] = math.log(2.0) + 2.0 * xi + mean(t * si) + base - ph
        return out

    s_max = 2.0 * t + 10.0
    fock_truncation_index(model, t * s_max)  # fail early if the table is short
    scan = np.linspace(-20.0, math.log(s_max), 261)
    res = laplace_log_integral(G, scan, tol=tol)
    return math.exp(res.log_value), res.err


def fock_schur_integral(model: FockKernelModel, t_grid: Iterable[float],
                        tol: float = 1e-10) -> FockSchur:
    """Plane Schur integral at each ``t``; see :func:`fock_schur_point`."""
    t = np.asarray(list(t_grid), dtype=float)
    if t.size == 0:
        raise DomainError("t grid is empty")
    vals, errs = zip(*(fock_schur_point(model, float(x), tol) for x in t))
    return FockSchur(t, np.array(vals), np.array(errs))


def fock_limit_condition_check(spec: WeightSpec, n: int,
                               r_grid: Iterable[float] | None = None) -> LimitTable:
    """``phi^{(n)} / (phi')^n`` on a plane grid with a decay verdict."""
    if not spec.is_fock:
        raise DomainError("plane family required")
    return check_limit_condition(spec, n, r_grid)

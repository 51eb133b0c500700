"""Smooth dyadic partial sums ``V_n`` and the block bound for ``M1(r, K)``.

``Psi`` is the standard smooth step (1 on ``t <= 1``, 0 on ``t >= 2``)
and ``psi(t) = Psi(t/2) - Psi(t)`` is supported in ``(1, 4)``.  The blocks

    V_0 = 1 + z,      V_n(z) = sum_k psi(k / 2^(n-1)) z^k   (n >= 1)

form a partition of unity on coefficients, so ``f = sum_n V_n * f`` for the
Hadamard (coefficientwise) product ``*``.  The kernel bound applies the
triangle inequality block by block:

    M1(r, K) <= 2 pi sum_n ||V_n * K_r||_{H^1},   K_r(z) = K(r z),

evaluating the first three blocks exactly and bounding the rest through
``||W^Phi_1 * V_n||_{H^1} <= kappa A_{Phi,2} ||V_n||_{H^1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from . import calibration
from .errors import ConvergenceError, DomainError
from .kernel import KernelModel, integral_mean_M1, truncation_index
from .moments import log_moments, moment

LOG_2PI = math.log(2.0 * math.pi)


def _g(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def big_psi(t):
    """Smooth step: 1 for ``t <= 1``, 0 for ``t >= 2``, decreasing between."""
    t = np.asarray(t, dtype=float)
    a = _g(2.0 - t)
    b = _g(t - 1.0)
    with np.errstate(invalid="ignore"):
        mid = a / (a + b)
    out = np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, mid))
    return out.item() if out.ndim == 0 else out


def psi(t):
    """``Psi(t/2) - Psi(t)``; a bump supported in ``(1, 4)`` with ``psi(2) = 1``."""
    t = np.asarray(t, dtype=float)
    out = np.asarray(big_psi(t / 2.0)) - np.asarray(big_psi(t))
    return out.item() if out.ndim == 0 else out


def smooth_window(x, a: float, b: float):
    """1 on ``[a, b]``, 0 outside ``(a/2, 2b)``, smooth in between."""
    x = np.asarray(x, dtype=float)
    out = np.asarray(big_psi(x / b)) * (1.0 - np.asarray(big_psi(2.0 * x / a)))
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class PolyBlock:
    """Polynomial ``sum_k coeffs[k - start] z^k``."""

    n: int
    start: int
    coeffs: np.ndarray

    @property
    def stop(self) -> int:
        return self.start + self.coeffs.size

    def as_dict(self) -> Dict[int, float]:
        return {self.start + i: float(c) for i, c in enumerate(self.coeffs) if c != 0.0}

    def dense(self, length: int | None = None) -> np.ndarray:
        length = self.stop if length is None else length
        out = np.zeros(length)
        hi = min(self.stop, length)
        if hi > self.start:
            out[self.start:hi] = self.coeffs[:hi - self.start]
        return out


@lru_cache(maxsize=64)
def vn_block(n: int) -> PolyBlock:
    """``V_0 = 1 + z``; for ``n >= 1`` coefficients ``psi(k / 2^(n-1))``."""
    if n < 0:
        raise DomainError("block index must be >= 0")
    if n == 0:
        return PolyBlock(0, 0, np.array([1.0, 1.0]))
    lo = 2 ** (n - 1)
    k = np.arange(lo, 2 ** (n + 1))
    c = np.asarray(psi(k / lo), dtype=float)
    c.setflags(write=False)
    return PolyBlock(n, lo, c)


def hadamard(f_coeffs, block: PolyBlock) -> np.ndarray:
    """Coefficientwise product of ``f`` (dense, from degree 0) with ``block``."""
    f = np.asarray(f_coeffs)
    return f * block.dense(f.size)


def n_blocks_for(degree: int) -> int:
    """Number of leading blocks whose coefficient sum is 1 on ``0..degree``.

    ``sum_{n <= N} V_n`` has coefficients ``Psi(k / 2^N)``, equal to 1 for
    ``k <= 2^N``.
    """
    if degree < 0:
        raise DomainError("degree must be >= 0")
    N = 0
    while 2 ** N < degree:
        N += 1
    return N + 1


def hardy_norm(coeffs, p: float, n_angles: int | None = None, rtol: float = 1e-6,
               max_angles: int = 2 ** 23) -> float:
    """``((1/2pi) int |sum_k c_k e^{ik theta}|^p d theta)^(1/p)``.

    Uniform sampling via FFT, doubling the sample count until two successive
    values agree to ``rtol``.
    """
    c = np.asarray(coeffs)
    if p <= 0:
        raise DomainError("p must be positive")
    deg = c.size
    n = n_angles or max(64, 1 << int(math.ceil(math.log2(2 * deg + 1))))
    prev = None
    while n <= max_angles:
        buf = np.zeros(n, dtype=complex)
        m = -(-deg // n) * n
        tmp = np.zeros(m, dtype=complex)
        tmp[:deg] = c
        buf = tmp.reshape(-1, n).sum(axis=0)
        vals = np.abs(np.fft.ifft(buf) * n)
        if p == 2:
            cur = math.sqrt(float(np.mean(vals ** 2)))
        else:
            scale = float(vals.max())
            if scale == 0:
                return 0.0
            cur = scale * float(np.mean((vals / scale) ** p)) ** (1.0 / p)
        if prev is not None and abs(cur - prev) <= rtol * cur:
            return cur
        prev = cur
        n *= 2
    raise ConvergenceError(f"H^{p} norm not stable within {max_angles} samples")


@lru_cache(maxsize=256)
def vn_norm(n: int, p: float) -> float:
    return hardy_norm(vn_block(n).dense(), p)


class VnScaling(NamedTuple):
    slope: float
    expected: float
    ns: np.ndarray
    norms: np.ndarray


def vn_norm_scaling(p: float, n_range: Sequence[int] = range(3, 13)) -> VnScaling:
    """Least-squares slope of ``log2 ||V_n||_{H^p}`` against ``n``.

    The default range starts at ``n = 3``: the first blocks hold one to
    three coefficients and are not yet dyadic bumps, so they sit off the
    power law (most visibly for ``p < 1``).
    """
    ns = np.asarray(list(n_range), dtype=int)
    if ns.size < 2 or ns.max() > 16 or ns.min() < 1:
        raise DomainError("n_range must hold at least two indices in [1, 16]")
    norms = np.array([vn_norm(int(n), float(p)) for n in ns])
    slope = float(np.polyfit(ns, np.log2(norms), 1)[0])
    return VnScaling(slope, 1.0 - 1.0 / p, ns, norms)


def vn_envelope_ratio(n: int, m: int = 2, n_theta: int = 1 << 14) -> float:
    """``max_theta |V_n(e^{i theta})| / min(2^(n-1) max|psi|, 2^((n-1)(1-m)) |theta|^-m max|psi^(m)|)``.

    A bounded value, stable in ``n``, evidences the decay envelope.
    """
    blk = vn_block(n)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    c = blk.dense()
    m_tot = -(-c.size // n_theta) * n_theta
    tmp = np.zeros(m_tot)
    tmp[:c.size] = c
    vals = np.abs(np.fft.ifft(tmp.reshape(-1, n_theta).sum(axis=0)) * n_theta)
    t = np.linspace(0.5, 4.5, 20001)
    psi_t = np.asarray(psi(t))
    max_psi = float(psi_t.max())
    if m == 0:
        max_der = max_psi
    else:
        d = psi_t
        h = t[1] - t[0]
        for _ in range(m):
            d = np.gradient(d, h)
        max_der = float(np.abs(d).max())
    dist = np.minimum(theta, 2 * np.pi - theta)
    scale = 2.0 ** (n - 1) if n >= 1 else 1.0
    with np.errstate(divide="ignore"):
        decay = np.where(dist > 0, scale ** (1 - m) * np.where(dist > 0, dist, 1.0) ** (-m)
                         * max_der, np.inf)
    bound = np.minimum(scale * max_psi, decay)
    return float(np.max(vals / bound))


# ---------------------------------------------------------------------------
# Kernel blocks


def _log_F(model: KernelModel, r: float, x):
    """``log F(x) = x log r - log v_{2x+1}`` for real ``x >= 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lv, _ = log_moments(model.alpha, 2.0 * x + 1.0, 0, tol=1e-13)
    return x * math.log(r) - lv


class BlockEnvelope(NamedTuple):
    log_value: float
    argmax: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def phi_n_envelope(model: KernelModel, r: float, n: int) -> BlockEnvelope:
    """Maximise ``F(x) = r^x / v_{2x+1}`` over ``[2^(n-1), 2^(n+1)]``.

    ``log F`` is unimodal, so a bounded Brent (golden-section) search plus
    the two endpoints locates the maximum.
    """
    if not 0 < r < 1:
        raise DomainError("need 0 < r < 1")
    if n < 1:
        raise DomainError("n must be >= 1")
    a, b = 2.0 ** (n - 1), 2.0 ** (n + 1)
    if b > 2 * model.N_max:
        raise DomainError("block lies beyond the coefficient table")
    f = lambda x: -float(_log_F(model, r, x)[0])
    res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10 * b})
    cands = [(-f(a), a), (-f(b), b), (-float(res.fun), float(res.x))]
    best = max(cands)
    return BlockEnvelope(best[0], best[1])


def kernel_slice(model: KernelModel, r: float, length: int) -> np.ndarray:
    """``log(c_k r^k)`` for ``k < length``."""
    k = np.arange(length, dtype=float)
    return model.log_coeffs[:length] + k * math.log(r)


def block_hardy_norm(model: KernelModel, r: float, n: int, log: bool = True):
    """``||V_n * K_r||_{H^1}`` computed directly from the coefficients."""
    blk = vn_block(n)
    if blk.stop > model.log_coeffs.size:
        raise DomainError("block lies beyond the coefficient table")
    la = kernel_slice(model, r, blk.stop)[blk.start:]
    mx = float(la.max())
    c = np.zeros(blk.stop)
    c[blk.start:] = np.exp(la - mx) * blk.coeffs
    val = math.log(hardy_norm(c, 1.0)) + mx
    return val if log else math.exp(val)


def a_phi_proxy(model: KernelModel, r: float, n: int, n_samples: int = 10_000) -> float:
    """Log of ``max|Phi_n| + max|Phi_n''|`` on a dense grid.

    ``Phi_n = F * window`` with the window equal to 1 on the dyadic block
    ``[2^(n-1), 2^(n+1)]`` and vanishing outside ``[2^(n-2), 2^(n+2)]``.
    """
    a, b = 2.0 ** (n - 1), 2.0 ** (n + 1)
    x = np.linspace(a / 2, 2 * b, n_samples)
    lf = _log_F(model, r, x)
    mx = float(lf.max())
    phi = np.exp(lf - mx) * np.asarray(smooth_window(x, a, b))
    h = x[1] - x[0]
    d2 = np.gradient(np.gradient(phi, h), h)
    return mx + math.log(float(np.abs(phi).max()) + float(np.abs(d2).max()))


def wphi_identity_check(model: KernelModel, r: float, n: int) -> float:
    """Max relative gap between ``V_n * K_r`` and ``W_1^{Phi_n} * V_n``.

    ``Phi_n`` is sampled at integers through the scalar moment route, so it
    does not share code with the batch-built coefficient table; the two
    agree in exact arithmetic because the window equals 1 on the support
    of ``V_n``.
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    blk = vn_block(n)
    k = np.arange(blk.start, blk.stop, dtype=float)
    lhs = kernel_slice(model, r, blk.stop)[blk.start:]
    spec = model.spec
    lf_scalar = np.array([x * math.log(r) - moment(spec, 2 * x + 1, 0, 1e-13).log_value
                          for x in k])
    with np.errstate(divide="ignore"):
        lf = lf_scalar + np.log(np.asarray(smooth_window(k, 2.0 ** (n - 1), 2.0 ** (n + 1))))
    # compare c_k r^k psi_k against Phi_n(k) psi_k in log space (psi_k > 0 cancels)
    mask = blk.coeffs > 0
    return float(np.max(np.abs(np.expm1(lf[mask] - lhs[mask]))))


def cesaro_ratio(model: KernelModel, r: float, n: int) -> float:
    """``||W_1^{Phi_n} * V_n||_{H^1} / (A_{Phi_n,2} ||V_n||_{H^1})``."""
    lhs = block_hardy_norm(model, r, n)
    return math.exp(lhs - a_phi_proxy(model, r, n) - math.log(vn_norm(n, 1.0)))


class ChainBound(NamedTuple):
    log_bound: float
    log_m1: float
    ratio: float
    holds: bool
    n_blocks: int


def upper_bound_chain(model: KernelModel, r: float, kappa: float | None = None,
                      tol: float = 1e-12) -> ChainBound:
    """Block bound ``2 pi (sum_{n<3} ||V_n*K_r|| + kappa sum_{n>=3} A_n ||V_n||)``.

    Blocks are added until they fall below ``tol`` of the running total or
    leave the truncation range of ``K_r``.
    """
    kappa = calibration.CESARO_KAPPA if kappa is None else kappa
    if not 0 <= r < 1:
        raise DomainError("radius must lie in [0, 1)")
    m1 = integral_mean_M1(model, r).log_value
    if r == 0:
        lb = LOG_2PI + float(model.log_coeffs[0])  # only the constant term survives
        return ChainBound(lb, m1, math.exp(lb - m1), lb >= m1 - 1e-12, 1)
    N = truncation_index(model, r, tol)
    parts = [block_hardy_norm(model, r, n) for n in range(3)]
    n = 3
    while 2 ** (n - 1) <= N:
        if 2 ** (n + 2) > 2 * model.N_max:
            break
        part = math.log(kappa) + a_phi_proxy(model, r, n) + math.log(vn_norm(n, 1.0))
        parts.append(part)
        n += 1
    total = LOG_2PI + float(np.logaddexp.reduce(parts))
    return ChainBound(total, m1, math.exp(total - m1), total >= m1, n)

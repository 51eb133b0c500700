"""Moments of radial weights.

For a disk weight ``w`` the moment of order ``lam`` with ``n`` logarithmic
factors is

    v_{lam, log^n} = int_0^1 r^lam (log 1/r)^n w(r) dr,

and for a plane weight ``m_n = 2 int_0^inf r^(2n+1) w(r) dr`` (area
measure normalised by ``pi``).  Both are computed in log space.  With
``t = log(1/r)`` the disk integrand becomes ``exp(-(lam+1) t + n log t +
log w(e^-t))``, a sharply peaked log-concave profile; we locate its peak,
cut a window where it has dropped by ``drop`` e-folds and integrate the
window adaptively.

Two independent routes exist.  :func:`moment` works for every disk family
and integrates in ``x = log t`` with Brent peak search and panel doubling.  :func:`log_moments`
handles the exponential weight only and runs the compiled (or numpy)
Gauss-Legendre panel kernel over whole ``lam`` arrays; the kernel tables
rely on it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize

from . import _backend
from .errors import DomainError, QuadratureError
from .weights import WeightSpec

DEFAULT_DROP = 45.0
_GL_X, _GL_W = leggauss(20)


class MomentResult(NamedTuple):
    log_value: float
    err: float


def _log_weight_gap(spec: WeightSpec, gap):
    """``log w(r)`` written in terms of ``gap = 1 - r`` (no cancellation)."""
    f = spec.family
    gap = np.asarray(gap, dtype=float)
    if f == "ExpDisk":
        return -spec.alpha / gap
    if f == "GenExpDisk":
        q = gap * (2.0 - gap)
        return spec.A * np.log(q) - spec.B * q ** (-spec.kappa)
    if f == "TripleExpDisk":
        with np.errstate(over="ignore"):
            return -np.exp(np.exp(np.minimum(1.0 / gap, 800.0)))
    raise DomainError(f"{f} is not a disk family")


def _gl_window(G, a, b, gs, npan):
    edges = np.linspace(a, b, npan + 1)
    h = np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = mid[:, None] + 0.5 * h[:, None] * _GL_X[None, :]
    return float(np.sum(0.5 * h[:, None] * _GL_W[None, :] * np.exp(G(x) - gs)))


def laplace_log_integral(G: Callable[[np.ndarray], np.ndarray], scan: Sequence[float],
                         tol: float = 1e-12, drop: float = DEFAULT_DROP,
                         max_panels: int = 4096) -> MomentResult:
    """``log int exp(G(x)) dx`` over the real line for unimodal ``G``.

    ``G`` must accept numpy arrays.  ``scan`` is a coarse increasing grid
    used to bracket the maximum, which is then polished with Brent's method.
    The window ``{G >= G_max - drop}`` is integrated by composite 20-point
    Gauss-Legendre on each side of the peak, doubling the panel count until
    successive sums agree to ``tol``; the mass outside the window is bounded
    through the slope of ``G`` at its edges and added to the error.

    Raises
    ------
    QuadratureError
        If the relative error estimate exceeds ``tol``.
    """
    scan = np.asarray(scan, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = np.where(np.isnan(G(scan)), -np.inf, G(scan))
    if not np.any(np.isfinite(vals)):
        raise QuadratureError("integrand vanishes on the whole scan grid")
    i = int(np.argmax(vals))
    a = scan[max(i - 1, 0)]
    b = scan[min(i + 1, scan.size - 1)]
    g1 = lambda x: float(G(np.asarray(x, dtype=float)))
    res = optimize.minimize_scalar(lambda x: -g1(x), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-13 * max(1.0, abs(scan[i]))})
    xp = float(res.x)
    gs = g1(xp)
    if vals[i] > gs:
        xp, gs = float(scan[i]), float(vals[i])
    target = gs - drop

    def edge(direction):
        step = max(b - a, 1e-6)
        near = xp
        far = xp + direction * step
        while g1(far) > target:
            near = far
            step *= 2.0
            far = xp + direction * step
            if step > 1e4:
                raise QuadratureError("integrand does not decay", best=gs)
        return optimize.brentq(lambda x: g1(x) - target, min(near, far), max(near, far),
                               xtol=1e-15, rtol=1e-15)

    with np.errstate(over="ignore", divide="ignore"):
        xl = edge(-1.0)
        xh = edge(1.0)
        npan = 2
        prev = _gl_window(G, xl, xp, gs, npan) + _gl_window(G, xp, xh, gs, npan)
        while True:
            npan *= 2
            total = _gl_window(G, xl, xp, gs, npan) + _gl_window(G, xp, xh, gs, npan)
            qerr = abs(total - prev) / total
            if qerr <= 0.1 * tol or npan >= max_panels:
                break
            prev = total
    # concave tails beyond the window: mass <= exp(G_edge) / |G'(edge)|
    h = 1e-6
    tail = 0.0
    for x, sgn in ((xl, 1.0), (xh, -1.0)):
        slope = sgn * (g1(x + h) - g1(x - h)) / (2 * h)
        tail += math.exp(g1(x) - gs) / max(slope, 1e-300)
    rel = qerr + tail / total
    log_value = gs + math.log(total)
    if not rel <= tol:
        raise QuadratureError(f"relative error {rel:.3g} above tolerance {tol:.3g}",
                              best=log_value, err=rel)
    return MomentResult(log_value, rel)


def _disk_exponent(spec: WeightSpec, lam: float, logpow: int):
    lam1 = lam + 1.0

    def G(x):
        t = np.exp(x)
        gap = -np.expm1(-t)
        with np.errstate(divide="ignore"):
            return np.where(gap > 0, -lam1 * t + (logpow + 1) * x
                            + _log_weight_gap(spec, np.where(gap > 0, gap, 1.0)), -np.inf)
    return G


def moment(spec: WeightSpec, lam: float, logpow: int = 0, tol: float = 1e-12) -> MomentResult:
    """Log of ``int_0^1 r^lam (log 1/r)^logpow w(r) dr`` for a disk weight.

    Parameters
    ----------
    spec : WeightSpec
        Disk family.
    lam : float
        Power of ``r``; ``lam > -1``.
    logpow : int
        Power of ``log(1/r)``.
    tol : float
        Target relative error, at least ``1e-14``.

    Returns
    -------
    MomentResult
        ``(log_value, err)`` with ``err`` a relative error estimate.
    """
    if not spec.is_disk:
        raise DomainError("moment() needs a disk family; use fock_moment for the plane")
    if tol < 1e-14:
        raise DomainError("tol must be >= 1e-14")
    if not lam > -1.0 or logpow < 0:
        raise DomainError("need lam > -1 and logpow >= 0")
    scan = np.linspace(-40.0, 6.0, 461)
    return laplace_log_integral(_disk_exponent(spec, float(lam), int(logpow)), scan, tol=tol)


def log_moments(alpha: float, lams, logpow: int = 0, tol: float = 1e-13,
                drop: float = DEFAULT_DROP):
    """Batch log-moments of ``exp(-alpha/(1-r))`` over an array of ``lam``.

    Returns
    -------
    log_values, rel_err : ndarray
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    lams = np.ascontiguousarray(lams, dtype=np.float64)
    if lams.size and not np.all(lams > -1.0):
        raise DomainError("need lam > -1")
    return _backend.log_moments_expdisk(lams, float(alpha), float(logpow),
                                        _GL_X, _GL_W, float(tol), float(drop))


def moment_asymptote(alpha: float, lam, logpow: int = 0):
    """Log of ``lam^{-(2n+3)/4} exp(-2 sqrt(alpha lam))``.

    >>> moment_asymptote(1.0, 1.0, 0)
    -2.0
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("lam must be positive")
    out = -((2 * logpow + 3) / 4.0) * np.log(lam) - 2.0 * np.sqrt(alpha * lam)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class MomentTable:
    """Moments over a strictly increasing ``lam`` grid."""

    spec: WeightSpec
    logpow: int
    lambdas: np.ndarray
    log_values: np.ndarray
    errs: np.ndarray
    log_asymptotes: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.lambdas) <= 0):
            raise ValueError("lambdas must be strictly increasing")
        if np.any(np.diff(self.log_values) >= 0):
            raise ValueError("log-moments must decrease in lam")

    @property
    def ratios(self) -> np.ndarray:
        return np.exp(self.log_values - self.log_asymptotes)

    def second_differences(self) -> np.ndarray:
        """Divided second differences of ``log v``; nonnegative when log-convex."""
        lam, lv = self.lambdas, self.log_values
        d1 = np.diff(lv) / np.diff(lam)
        return np.diff(d1) / (0.5 * (lam[2:] - lam[:-2]))

    def rows(self):
        for row in zip(self.lambdas, self.log_values, self.errs,
                       self.log_asymptotes, self.ratios):
            yield tuple(float(v) for v in row)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "log_value", "err", "log_asymptote", "ratio"])
            for row in self.rows():
                w.writerow([repr(v) for v in row])


def moment_table(spec: WeightSpec, lambdas, logpow: int = 0, tol: float = 1e-12,
                 batch: bool = True) -> MomentTable:
    """Tabulate moments; ExpDisk uses the batch kernel unless ``batch=False``."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        raise DomainError("empty lambda grid")
    if spec.family == "ExpDisk" and batch:
        lv, err = log_moments(spec.alpha, lam, logpow, tol=tol)
        if np.any(err > tol):
            k = int(np.argmax(err))
            raise QuadratureError(f"tolerance missed at lambda={lam[k]}", best=lv[k], err=err[k])
    else:
        res = [moment(spec, x, logpow, tol) for x in lam]
        lv = np.array([r.log_value for r in res])
        err = np.array([r.err for r in res])
    if spec.family == "ExpDisk":
        with np.errstate(divide="ignore"):
            asym = np.where(lam > 0, moment_asymptote(spec.alpha, np.maximum(lam, 1e-300), logpow),
                            np.nan)
    else:
        asym = np.full(lam.shape, np.nan)
    return MomentTable(spec, int(logpow), lam, np.asarray(lv), np.asarray(err), asym)


class SandwichRow(NamedTuple):
    lam: float
    lower_ok: bool
    upper_ok: bool
    lower_slack: float
    upper_slack: float


def moment_sandwich_check(spec: WeightSpec, lambda_grid, tol: float = 1e-12):
    """Check ``v_lam <= int r^lam exp(-alpha/log(1/r)) dr <= e^alpha v_lam``.

    Slacks are log-gaps: ``log J - log v`` and ``alpha - (log J - log v)``.
    """
    if spec.family != "ExpDisk":
        raise DomainError("sandwich check applies to ExpDisk")
    a = spec.alpha
    rows = []
    scan = np.linspace(-40.0, 6.0, 461)
    for lam in np.asarray(lambda_grid, dtype=float):
        lam1 = lam + 1.0
        lv = moment(spec, lam, 0, tol).log_value
        lj = laplace_log_integral(lambda x: -lam1 * np.exp(x) + x - a * np.exp(-x),
                                  scan, tol=tol).log_value
        gap = lj - lv
        rows.append(SandwichRow(float(lam), gap >= 0.0, gap <= a, gap, a - gap))
    return rows


def fock_moment(spec: WeightSpec, n: int, tol: float = 1e-12) -> MomentResult:
    """Log of ``m_n = 2 int_0^inf r^(2n+1) w(r) dr`` for a plane weight."""
    if not spec.is_fock:
        raise DomainError("fock_moment needs a plane family")
    if n < 0:
        raise DomainError("n must be nonnegative")
    k = 2.0 * n + 2.0
    if spec.family == "FockGaussian":
        G = lambda s: math.log(2.0) + k * s - np.exp(np.minimum(2.0 * s, 700.0))
    else:
        m = spec.m
        G = lambda s: math.log(2.0) + k * s - 2.0 * np.exp(np.minimum(m * s, 700.0))
    scan = np.linspace(-30.0, 30.0, 601)
    return laplace_log_integral(G, scan, tol=tol)

"""Schur integrals and discretised projections for the weight ``v = exp(-alpha/(1-r))``.

Normalisation: area measure ``dm = dA / pi``.  Under ``dm`` the monomials
have ``||z^k||^2_{L^2(v)} = 2 v_{2k+1}``, so the reproducing kernel of the
weighted space is ``K(u) / 2`` with ``K`` the series of :mod:`kernel`.
The Schur integrals below keep ``K`` itself and the factor ``1/pi`` of
the polar reduction ``dA = s ds dtheta``.

Discretisation.  Radial nodes ``s = 1 - e^{-u}`` come from Gauss-Legendre
in ``u``; ``n_angles`` equispaced angles complete a polar grid.  The
discrete operator

    (P f)(z_i) = sum_j omega_j K_N(z_i conj(zeta_j)) / 2 * v(zeta_j) f(zeta_j)

uses the degree ``< n_angles / 2`` section ``K_N`` of ``K``.  With that
choice angular aliasing cannot occur and the operator splits exactly into
Fourier modes ``k``, each a rank-one radial block.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import ConvergenceError, DomainError, MemoryBudgetError
from .kernel import KernelModel, M1Profile

# ---------------------------------------------------------------------------
# Identity and the f_r integrand


def ident2_terms(r, s, dtype=np.longdouble):
    """``(lhs, rhs, scale)`` of
    ``1/(1-sqrt(sr)) - 1/(2(1-r)) - 1/(2(1-s)) = (sqrt s - sqrt r)/(2(1-sqrt(sr))) (sqrt r/(1-r) - sqrt s/(1-s))``.

    Both sides are evaluated in ``dtype`` (extended precision by default:
    the left side cancels terms of size ``1/(1-r)``).  ``scale`` is the sum
    of the magnitudes of the three left-hand terms.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any((r <= 0) | (r >= 1) | (s <= 0) | (s >= 1)):
        raise DomainError("need 0 < r, s < 1")
    r, s = r.astype(dtype), s.astype(dtype)
    one, half = dtype(1), dtype(0.5)
    rr, rs = np.sqrt(r), np.sqrt(s)
    d = one - rr * rs
    t1, t2, t3 = one / d, half / (one - r), half / (one - s)
    lhs = t1 - t2 - t3
    rhs = half * (rs - rr) / d * (rr / (one - r) - rs / (one - s))
    return lhs, rhs, t1 + t2 + t3


def ident2_residual(r, s, relative: bool = False, dtype=np.longdouble):
    """LHS - RHS of the identity above, optionally divided by its term scale."""
    lhs, rhs, scale = ident2_terms(r, s, dtype)
    out = (lhs - rhs) / scale if relative else lhs - rhs
    out = np.asarray(out, dtype=float)
    return out.item() if out.ndim == 0 else out


def log_f_r(alpha: float, r, s):
    """Log of ``exp(alpha/(1-sqrt(sr)) - alpha/(2(1-r)) - alpha/(2(1-s))) s / (1-sqrt(sr))^{3/2}``."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    rr, rs = np.sqrt(r), np.sqrt(s)
    d = 1.0 - rr * rs
    # exponent via the right-hand side of the identity: no cancellation, always <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        expo = alpha * 0.5 * (rs - rr) / d * (rr / (1.0 - r) - rs / (1.0 - s))
        out = expo + np.log(s) - 1.5 * np.log(d)
    out = np.where((s >= 1.0) | (r >= 1.0), -np.inf, out)
    return out.item() if out.ndim == 0 else out


def f_r_integrand(alpha: float, r, s):
    """``f_r(s)``; see :func:`log_f_r`."""
    out = np.exp(np.asarray(log_f_r(alpha, r, s)))
    return out.item() if out.ndim == 0 else out


def _integrate_u(logf, a: float, b: float, points: Sequence[float] = (),
                 epsrel: float = 1e-10) -> float:
    """``int_a^b exp(logf(s)) ds`` in ``u = -log(1-s)``."""
    if b <= a:
        return 0.0
    ua, ub = -math.log1p(-a), (-math.log1p(-b) if b < 1 else 40.0)
    pts = sorted({-math.log1p(-p) for p in points if a < p < b})

    def g(u):
        s = -math.expm1(-u)
        return math.exp(float(logf(s)) - u)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, ua, ub, points=pts or None, limit=500,
                                epsabs=0.0, epsrel=epsrel)
    return val


class PiecewiseBounds(NamedTuple):
    r: float
    low: float        # int over [0, 1/2]
    middle: float     # int over [r - d, r + d], d = (1-r)^{3/2}
    upper: float      # int over [r + d, 1]
    between: float    # int over [1/2, r - d], possibly empty
    middle_crude: float
    total: float      # direct int over [0, 1]

    @property
    def parts(self):
        return (self.low, self.middle, self.upper, self.between)


def piecewise_bounds(alpha: float, r: float) -> PiecewiseBounds:
    """Integrate ``f_r`` over the four pieces of the unit interval.

    ``middle_crude`` is the interval length times the largest value of the
    exponent-free factor ``s / (1 - sqrt(sr))^{3/2}`` on the middle piece.
    """
    if not 0.5 < r < 1:
        raise DomainError("need 1/2 < r < 1")
    d = (1.0 - r) ** 1.5
    lo_m, hi_m = max(r - d, 0.0), min(r + d, 1.0)
    logf = lambda s: log_f_r(alpha, r, s)
    low = _integrate_u(logf, 0.0, 0.5)
    middle = _integrate_u(logf, lo_m, hi_m, points=(r,))
    upper = _integrate_u(logf, hi_m, 1.0)
    between = _integrate_u(logf, 0.5, lo_m) if lo_m > 0.5 else 0.0
    ss = np.linspace(lo_m, hi_m, 201)
    crude = (hi_m - lo_m) * float(np.max(ss / (1.0 - np.sqrt(ss * r)) ** 1.5))
    total = _integrate_u(logf, 0.0, 1.0, points=(0.5, lo_m, r, hi_m))
    return PiecewiseBounds(float(r), low, middle, upper, between, crude, total)


# ---------------------------------------------------------------------------
# Schur integral


def default_r_grid(n: int = 13, depth: float = 3.0) -> np.ndarray:
    """``r = 1 - 10^{-u}`` for ``u`` evenly spaced in ``[0, depth]``."""
    return -np.expm1(-math.log(10.0) * np.linspace(0.0, depth, n))


def schur_integral(profile: M1Profile, r: float, pairing: str = "half_weight",
                   epsrel: float = 1e-9) -> float:
    """``I(r) = (1/pi) int_0^1 s M1(rs, K) W_r(s) ds``.

    ``pairing="half_weight"`` uses ``W_r(s) = exp(-alpha/(2(1-r)) - alpha/(2(1-s)))``
    (weights ``v^{1/2}`` on both variables); ``pairing="full_weight"`` uses
    ``W_r(s) = exp(-alpha/(1-s))``, the Schur quantity of the projection on
    ``L^p(v)``.
    """
    alpha = profile.model.alpha
    if not 0 <= r <= profile.t_max:
        raise DomainError(f"need 0 <= r <= {profile.t_max}")
    if pairing == "half_weight":
        shift = -alpha / (2.0 * (1.0 - r))
        half = 0.5
    elif pairing == "full_weight":
        shift, half = 0.0, 1.0
    else:
        raise ValueError(f"unknown pairing {pairing!r}")

    def integrand(s):
        if s <= 0.0 or s >= 1.0:
            return -math.inf
        return (math.log(s) + float(profile(r * s)) + shift - half * alpha / (1.0 - s)
                - math.log(math.pi))

    pts = ()
    if r > 0:
        w = (1.0 - r) ** 1.5
        pts = (max(r - 10 * w, 0.5 * r), r, min(r + 10 * w, 0.5 * (1 + r)))
    return _integrate_u(integrand, 0.0, 1.0, points=pts, epsrel=epsrel)


class SchurScan(NamedTuple):
    radii: np.ndarray
    values: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def plateau_ratio(self) -> float:
        return float(np.max(self.values) / np.median(self.values))

    @property
    def growth(self) -> float:
        return float(self.values[-1] / self.values[0])


def schur_scan(profile: M1Profile, radii: Iterable[float],
               pairing: str = "half_weight") -> SchurScan:
    r = np.asarray(list(radii), dtype=float)
    return SchurScan(r, np.array([schur_integral(profile, float(x), pairing) for x in r]))


# ---------------------------------------------------------------------------
# Polar grids


@dataclass(frozen=True)
class PolarGrid:
    """Radial nodes ``s_j`` with ``ds`` weights and an angle count.

    ``area_weights = quad_weights * 2 s`` integrate against ``dm`` after
    averaging over angles; they sum to 1 up to the truncation at ``u_tail``.
    """

    nodes: np.ndarray
    quad_weights: np.ndarray
    n_angles: int
    clustering: float
    resolution: int

    @property
    def area_weights(self) -> np.ndarray:
        return self.quad_weights * 2.0 * self.nodes

    @property
    def size(self) -> int:
        return self.nodes.size * self.n_angles

    @property
    def n_modes(self) -> int:
        return self.n_angles // 2

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles


def polar_grid(resolution: int, u_max: float = 7.0, u_tail: float = 30.0,
               n_tail: int = 12, angle_factor: int = 8) -> PolarGrid:
    """Gauss-Legendre in ``u`` on ``[0, u_max]`` (``resolution`` nodes) plus a
    short tail panel on ``[u_max, u_tail]``; ``s = 1 - e^{-u}``.
    """
    if resolution < 2:
        raise DomainError("resolution must be >= 2")
    x, w = leggauss(resolution)
    u = 0.5 * u_max * (x + 1.0)
    wu = 0.5 * u_max * w
    if n_tail:
        xt, wt = leggauss(n_tail)
        u = np.concatenate([u, u_max + 0.5 * (u_tail - u_max) * (xt + 1.0)])
        wu = np.concatenate([wu, 0.5 * (u_tail - u_max) * wt])
    s = -np.expm1(-u)
    ws = wu * np.exp(-u)
    return PolarGrid(s, ws, angle_factor * resolution, u_max, resolution)


# ---------------------------------------------------------------------------
# Discrete projection


MODES = ("full_weight", "half_weight")


@dataclass(frozen=True)
class DiscreteProjection:
    """Quadrature projection between weighted discrete ``L^p`` spaces.

    ``mode="full_weight"`` measures both sides in ``L^p(v)``;
    ``mode="half_weight"`` in ``L^p(v^{p/2})``.
    """

    model: KernelModel
    grid: PolarGrid
    mode: str
    p: float
    log_v: np.ndarray = field(repr=False)
    dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def log_norm_weight(self) -> np.ndarray:
        """Log of the radial measure ``omega_j W_j`` of the norm."""
        lw = self.log_v if self.mode == "full_weight" else 0.5 * self.p * self.log_v
        return np.log(self.grid.area_weights) + lw

    def mode_factors(self, k: int):
        """Rank-one factors of Fourier mode ``k`` in unweighted coordinates.

        The block equals ``exp(log_scale) * a b^T`` acting on
        ``x_j = mu_j^{1/p} g_j`` where ``mu`` is :attr:`log_norm_weight`.
        """
        s = self.grid.nodes
        mu = self.log_norm_weight
        la = k * np.log(s) + mu / self.p
        lb = k * np.log(s) + np.log(self.grid.area_weights) + self.log_v - mu / self.p
        base = float(self.model.log_coeffs[k]) - math.log(2.0)
        ma, mb = float(la.max()), float(lb.max())
        return np.exp(la - ma), np.exp(lb - mb), base + ma + mb

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Apply to samples ``f[j, l]`` at ``s_j e^{i theta_l}`` via angular FFT."""
        f = np.asarray(f, dtype=complex)
        nr, L = self.grid.nodes.size, self.grid.n_angles
        if f.shape != (nr, L):
            raise DomainError(f"expected samples of shape {(nr, L)}")
        fk = np.fft.fft(f, axis=1) / L  # f = sum_k fk[:, k] e^{ik theta}
        out = np.zeros_like(fk)
        s = self.grid.nodes
        w = self.grid.area_weights * np.exp(self.log_v)
        for k in range(self.grid.n_modes):
            lc = float(self.model.log_coeffs[k]) - math.log(2.0)
            # c_k/2 r^k sum_j w_j s_j^k g_j, in log space for the large factors
            lt = k * np.log(s)
            with np.errstate(divide="ignore"):
                inner = np.sum(np.exp(lt + np.log(w)) * fk[:, k])
            out[:, k] = np.exp(lc + lt) * inner
        return np.fft.ifft(out, axis=1) * L


def assemble_projection(model: KernelModel, grid: PolarGrid, mode: str = "half_weight",
                        p: float = 2.0, dense: bool = False,
                        memory_budget: float = 512e6) -> DiscreteProjection:
    """Build the discrete projection; ``dense=True`` also materialises the
    ``(n_r n_a) x (n_r n_a)`` matrix (small grids only).

    Raises
    ------
    MemoryBudgetError
        If the dense matrix would exceed ``memory_budget`` bytes.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    if p < 1:
        raise DomainError("p must be >= 1")
    if model.N_max < grid.n_modes - 1:
        raise DomainError(f"kernel table needs N_max >= {grid.n_modes - 1}")
    log_v = -model.alpha / (1.0 - grid.nodes)
    mat = None
    if dense:
        nbytes = 16.0 * grid.size ** 2
        if nbytes > memory_budget:
            raise MemoryBudgetError(
                f"dense operator needs {nbytes / 1e6:.0f} MB > budget {memory_budget / 1e6:.0f} MB")
        mat = _dense_matrix(model, grid, log_v)
    return DiscreteProjection(model, grid, mode, float(p), log_v, mat)


def _dense_matrix(model: KernelModel, grid: PolarGrid, log_v: np.ndarray) -> np.ndarray:
    """Row/column index ``j * L + l`` for the node ``s_j e^{i theta_l}``."""
    s = grid.nodes
    nr, L, nm = s.size, grid.n_angles, grid.n_modes
    k = np.arange(nm)
    lc = model.log_coeffs[:nm] - math.log(2.0)
    col_w = grid.area_weights * np.exp(log_v) / L
    mat = np.empty((nr, L, nr, L), dtype=complex)
    idx = (np.arange(L)[:, None] - np.arange(L)[None, :]) % L
    for i in range(nr):
        for j in range(nr):
            coef = np.zeros(L)
            coef[:nm] = np.exp(lc + k * (np.log(s[i]) + np.log(s[j])))
            kern = np.fft.ifft(coef) * L  # K_N(r s e^{i d theta}) at d = 0..L-1
            mat[i, :, j, :] = kern[idx] * col_w[j]
    return mat.reshape(nr * L, nr * L)


# ---------------------------------------------------------------------------
# p-norm power iteration


def _dual(y: np.ndarray, p: float) -> np.ndarray:
    """Signed-power dual map: ``<dual(y), y> = ||y||_p``, ``||dual(y)||_q = 1``."""
    a = np.abs(y)
    nrm = np.linalg.norm(a, p) if p != np.inf else a.max()
    if nrm == 0:
        return np.zeros_like(y)
    with np.errstate(invalid="ignore", divide="ignore"):
        ph = np.where(a > 0, y / np.where(a > 0, a, 1.0), 0.0)
    return ph * (a / nrm) ** (p - 1)


def pnorm_power_iteration(matvec, rmatvec, dim: int, p: float, iterations: int = 32,
                          seed: int = 0, restarts: int = 8, complex_: bool = False,
                          rtol: float = 1e-13) -> float:
    """Lower bound on ``||A||_{p -> p}`` by Boyd's nonlinear power method.

    ``rmatvec`` applies the conjugate transpose.  The returned value is the
    running maximum of ``||A x||_p / ||x||_p`` over all iterates and restarts,
    so it can only grow with ``iterations``.  A restart stops early once
    the ratio changes by less than ``rtol``.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    if iterations < 1:
        raise DomainError("iterations must be >= 1")
    q = p / (p - 1.0) if p > 1 else np.inf
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(dim)
        if complex_:
            x = x + 1j * rng.standard_normal(dim)
        x /= np.linalg.norm(x, p)
        prev = 0.0
        for _ in range(iterations):
            y = matvec(x)
            val = float(np.linalg.norm(y, p))
            if not np.isfinite(val):
                raise ConvergenceError("non-finite iterate in power iteration")
            best = max(best, val)
            if abs(val - prev) <= rtol * val:
                break
            prev = val
            z = rmatvec(_dual(y, p))
            if not np.any(z):
                break
            x = _dual(z, q) if q != np.inf else np.where(np.abs(z) > 0, z / np.abs(z), 0)
            x = x / np.linalg.norm(x, p)
    return best


class OpNormResult(NamedTuple):
    value: float
    log_value: float
    mode_index: int


def opnorm_lower(proj: DiscreteProjection, iterations: int = 32, seed: int = 0,
                 restarts: int = 8) -> OpNormResult:
    """Lower bound on the discrete ``p -> p`` norm, maximised over Fourier modes.

    A function ``g(s) e^{ik theta}`` is mapped to a function of the same
    form, with equal angular factors in input and output norms, so each
    mode's rank-one radial block gives a valid lower bound.  The block norm
    is estimated by the p-norm power method (exact singular value at
    ``p = 2``).
    """
    if iterations < 16:
        raise DomainError("iterations must be >= 16")
    p = proj.p
    best = -math.inf
    kbest = 0
    for k in range(proj.grid.n_modes):
        a, b, log_scale = proj.mode_factors(k)
        if p == 2:
            val = float(np.linalg.norm(a) * np.linalg.norm(b))
        else:
            val = pnorm_power_iteration(lambda x: a * (b @ x), lambda y: b * (a @ y),
                                        a.size, p, iterations, seed + k, restarts)
        lv = log_scale + math.log(val)
        if lv > best:
            best, kbest = lv, k
    return OpNormResult(math.exp(best), best, kbest)


def opnorm_lower_dense(proj: DiscreteProjection, iterations: int = 64, seed: int = 0,
                       restarts: int = 8) -> float:
    """Power-method bound on the full dense operator (cross-check for small grids)."""
    if proj.dense is None:
        raise DomainError("projection was assembled without the dense matrix")
    L = proj.grid.n_angles
    log_d = np.repeat((proj.log_norm_weight - math.log(L)) / proj.p, L)
    # nodes whose weight underflows carry neither input nor output mass
    keep = np.exp(np.repeat(proj.log_v, L)) > 0
    log_d = log_d[keep]
    A = proj.dense[np.ix_(keep, keep)] * np.exp(log_d[:, None] - log_d[None, :])
    if proj.p == 2:
        return float(np.linalg.norm(A, 2))
    return pnorm_power_iteration(lambda x: A @ x, lambda y: A.conj().T @ y, A.shape[0],
                                 proj.p, iterations, seed, restarts, complex_=True)


def weighted_inner(proj: DiscreteProjection, f: np.ndarray, g: np.ndarray) -> complex:
    """``<f, g>_v = sum omega_j v_j f conj(g) / L`` on the grid."""
    w = proj.grid.area_weights * np.exp(proj.log_v) / proj.grid.n_angles
    return complex(np.sum(w[:, None] * f * np.conj(g)))


def grid_points(grid: PolarGrid) -> np.ndarray:
    return grid.nodes[:, None] * np.exp(1j * grid.angles)[None, :]

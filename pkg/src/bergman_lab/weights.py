"""Radial weight families and the derivative-product ledger.

Every weight is written ``w(r) = exp(-2 phi(r))``.  The families are

=============== =================================================== ==========
family          phi(r)                                              domain
=============== =================================================== ==========
ExpDisk         alpha / (2 (1 - r))                                 [0, 1)
GenExpDisk      -A/2 log(1 - r^2) + B / (2 (1 - r^2)^kappa)         [0, 1)
TripleExpDisk   exp(exp(1 / (1 - r))) / 2                           [0, 1)
FockMonomial    r^m                                                 [0, inf)
FockGaussian    r^2 / 2                                             [0, inf)
=============== =================================================== ==========

Derivatives of ``w`` are ``w^{(n)} = P_n(phi) w`` where ``P_n`` is an
integer combination of products ``prod_j (phi^{(j)})^{m(j)}`` with
``sum_j j m(j) = n``.  :func:`build_Pn` generates ``P_n`` from
``P_1 = -2 phi'`` and ``P_{n+1} = P_n' - 2 phi' P_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, NamedTuple, Tuple

import numpy as np

from .errors import DomainError

FAMILIES = ("ExpDisk", "GenExpDisk", "TripleExpDisk", "FockMonomial", "FockGaussian")
DISK_FAMILIES = ("ExpDisk", "GenExpDisk", "TripleExpDisk")
FOCK_FAMILIES = ("FockMonomial", "FockGaussian")
MAX_LEVEL = 8

_PARAMS = {
    "ExpDisk": ("alpha",),
    "GenExpDisk": ("A", "B", "kappa"),
    "TripleExpDisk": (),
    "FockMonomial": ("m",),
    "FockGaussian": (),
}


@dataclass(frozen=True)
class WeightSpec:
    """A radial weight ``exp(-2 phi(r))`` from one of the supported families.

    Use the classmethod constructors (:meth:`exp_disk`, ...) rather than
    filling fields by hand; unused parameters keep their defaults.
    """

    family: str
    alpha: float = 1.0
    A: float = 0.0
    B: float = 1.0
    kappa: float = 1.0
    m: float = 2.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown weight family {self.family!r}")
        for name in ("alpha", "B", "kappa", "m"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive, got {val}")
        if not np.isfinite(self.A):
            raise DomainError("A must be finite")

    @classmethod
    def exp_disk(cls, alpha: float = 1.0) -> "WeightSpec":
        return cls("ExpDisk", alpha=float(alpha))

    @classmethod
    def gen_exp_disk(cls, A: float = 0.0, B: float = 1.0, kappa: float = 1.0) -> "WeightSpec":
        return cls("GenExpDisk", A=float(A), B=float(B), kappa=float(kappa))

    @classmethod
    def triple_exp_disk(cls) -> "WeightSpec":
        return cls("TripleExpDisk")

    @classmethod
    def fock_monomial(cls, m: float) -> "WeightSpec":
        return cls("FockMonomial", m=float(m))

    @classmethod
    def fock_gaussian(cls) -> "WeightSpec":
        return cls("FockGaussian")

    @property
    def is_disk(self) -> bool:
        return self.family in DISK_FAMILIES

    @property
    def is_fock(self) -> bool:
        return self.family in FOCK_FAMILIES

    def to_dict(self) -> dict:
        out = {"family": self.family}
        for name in _PARAMS[self.family]:
            out[name] = float(getattr(self, name))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSpec":
        data = dict(data)
        family = data.pop("family", None)
        if family not in FAMILIES:
            raise DomainError(f"unknown weight family {family!r}")
        extra = set(data) - set(_PARAMS[family])
        if extra:
            raise DomainError(f"unexpected parameters for {family}: {sorted(extra)}")
        return cls(family, **{k: float(v) for k, v in data.items()})

    def __str__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self.to_dict().items() if k != "family")
        return f"{self.family}({args})"


def _check_radius(spec: WeightSpec, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and nonnegative")
    if spec.is_disk and np.any(r >= 1):
        raise DomainError(f"{spec.family} is defined on 0 <= r < 1")
    return r


def _scalar(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def phi(spec: WeightSpec, r):
    """Return ``phi(r)``; may overflow to ``inf`` for the triple exponential."""
    r = _check_radius(spec, r)
    f = spec.family
    with np.errstate(over="ignore"):
        if f == "ExpDisk":
            out = spec.alpha / (2.0 * (1.0 - r))
        elif f == "GenExpDisk":
            q = (1.0 - r) * (1.0 + r)
            out = -0.5 * spec.A * np.log(q) + 0.5 * spec.B * q ** (-spec.kappa)
        elif f == "TripleExpDisk":
            out = 0.5 * np.exp(np.exp(1.0 / (1.0 - r)))
        elif f == "FockMonomial":
            out = r ** spec.m
        else:
            out = 0.5 * r * r
    return _scalar(out)


def log_weight(spec: WeightSpec, r):
    """Return ``log w(r) = -2 phi(r)`` (``-inf`` once ``phi`` overflows)."""
    r = _check_radius(spec, r)
    if spec.family == "TripleExpDisk":
        with np.errstate(over="ignore"):
            return _scalar(-np.exp(np.exp(1.0 / (1.0 - r))))
    return _scalar(-2.0 * np.asarray(phi(spec, r)))


def eval_weight(spec: WeightSpec, r):
    """Evaluate ``w(r) = exp(-2 phi(r))``.

    Examples
    --------
    >>> eval_weight(WeightSpec.exp_disk(1.0), 0.9) == np.exp(-10.0)
    True
    """
    return _scalar(np.exp(np.asarray(log_weight(spec, r))))


# ---------------------------------------------------------------------------
# Truncated Taylor arithmetic.  A jet is an array ``c`` of shape (n+1, ...)
# with f(r0 + h) = sum_k c[k] h^k.


def _jet_exp(f):
    """Jet of ``exp(f) / exp(f[0])``."""
    n = f.shape[0] - 1
    g = np.zeros_like(f)
    g[0] = 1.0
    for k in range(1, n + 1):
        acc = np.zeros_like(f[0])
        for j in range(1, k + 1):
            acc = acc + j * f[j] * g[k - j]
        g[k] = acc / k
    return g


def _jet_pow(f, a):
    """Jet of ``f**a`` for ``f[0] > 0``."""
    n = f.shape[0] - 1
    g = np.zeros_like(f)
    g[0] = f[0] ** a
    for k in range(1, n + 1):
        acc = np.zeros_like(f[0])
        for j in range(1, k + 1):
            acc = acc + (a * j - (k - j)) * f[j] * g[k - j]
        g[k] = acc / (k * f[0])
    return g


def _jet_log(f):
    n = f.shape[0] - 1
    g = np.zeros_like(f)
    g[0] = np.log(f[0])
    for k in range(1, n + 1):
        acc = f[k].copy()
        for j in range(1, k):
            acc = acc - j * g[j] * f[k - j] / k
        g[k] = acc / f[0]
    return g


def _factorials(n):
    return np.array([math.factorial(k) for k in range(n + 1)], dtype=float)


class PhiJet(NamedTuple):
    """Scaled derivatives: ``phi^{(j)}(r) = exp(log_scale) * derivs[j]``."""

    log_scale: np.ndarray
    derivs: np.ndarray


def phi_jet(spec: WeightSpec, n: int, r) -> PhiJet:
    """Return ``phi, phi', ..., phi^{(n)}`` at ``r`` in scaled form.

    The common scale only matters for the triple exponential, whose
    derivatives overflow long before their ratios do.
    """
    if n < 0:
        raise DomainError("derivative order must be nonnegative")
    r = _check_radius(spec, r)
    shape = r.shape
    f = spec.family
    k = np.arange(n + 1).reshape((-1,) + (1,) * r.ndim)
    zero = np.zeros(shape)
    if f == "ExpDisk":
        d = 0.5 * spec.alpha * _factorials(n).reshape(k.shape) / (1.0 - r) ** (k + 1)
        return PhiJet(zero, d)
    if f == "FockGaussian":
        d = np.zeros((n + 1,) + shape)
        d[0] = 0.5 * r * r
        if n >= 1:
            d[1] = r
        if n >= 2:
            d[2] = 1.0
        return PhiJet(zero, d)
    if f == "FockMonomial":
        d = np.empty((n + 1,) + shape)
        coef = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(n + 1):
                if coef == 0.0:
                    d[j] = 0.0
                else:
                    d[j] = coef * r ** (spec.m - j)
                coef *= spec.m - j
        return PhiJet(zero, d)
    fact = _factorials(n).reshape(k.shape)
    if f == "GenExpDisk":
        q = np.zeros((n + 1,) + shape)  # jet of 1 - r^2
        q[0] = (1.0 - r) * (1.0 + r)
        if n >= 1:
            q[1] = -2.0 * r
        if n >= 2:
            q[2] = -1.0
        jet = -0.5 * spec.A * _jet_log(q) + 0.5 * spec.B * _jet_pow(q, -spec.kappa)
        return PhiJet(zero, jet * fact)
    # TripleExpDisk: phi = exp(F)/2 with F = exp(s), s = 1/(1 - r)
    s = 1.0 / (1.0 - r) ** (k + 1)
    inner = _jet_exp(s)  # F / exp(s0)
    with np.errstate(over="ignore"):
        big_f = np.exp(s[0]) * inner
    outer = _jet_exp(big_f)  # exp(F) / exp(F0)
    return PhiJet(big_f[0] - math.log(2.0), outer * fact)


def phi_derivative(spec: WeightSpec, n: int, r):
    """Return ``phi^{(n)}(r)``; ``n = 0`` gives ``phi`` itself.

    Examples
    --------
    >>> phi_derivative(WeightSpec.exp_disk(1.0), 1, 0.9)  # doctest: +ELLIPSIS
    50.0...
    """
    jet = phi_jet(spec, n, r)
    with np.errstate(over="ignore"):
        return _scalar(np.exp(jet.log_scale) * jet.derivs[n])


# ---------------------------------------------------------------------------
# Derivative-product ledger

Exponents = Tuple[Tuple[int, int], ...]


def _canon(exponents) -> Exponents:
    if isinstance(exponents, dict):
        items = exponents.items()
    else:
        items = exponents
    return tuple(sorted((int(j), int(m)) for j, m in items if m != 0))


def _level_of(exponents: Exponents) -> int:
    return sum(j * m for j, m in exponents)


@dataclass(frozen=True)
class DerivProduct:
    """``coeff * prod_j (phi^{(j)})^{m(j)}`` with ``sum_j j m(j) = level``."""

    level: int
    exponents: Exponents
    coeff: int

    def __post_init__(self):
        canon = _canon(self.exponents)
        object.__setattr__(self, "exponents", canon)
        if any(j < 1 or m < 0 for j, m in canon):
            raise ValueError(f"invalid exponent map {canon}")
        if _level_of(canon) != self.level:
            raise ValueError(
                f"product {canon} has level {_level_of(canon)}, not {self.level}")

    def power_of(self, j: int) -> int:
        return dict(self.exponents).get(j, 0)

    def render(self) -> str:
        return "*".join(
            f"(d{j})" if m == 1 else f"(d{j})^{m}" for j, m in self.exponents)


@dataclass(frozen=True)
class DerivPolynomial:
    """Integer combination of level-``level`` derivative products."""

    level: int
    terms: Tuple[DerivProduct, ...] = field(default=())

    def __post_init__(self):
        merged: Dict[Exponents, int] = {}
        for t in self.terms:
            if t.level != self.level:
                raise ValueError("all terms must share the polynomial level")
            merged[t.exponents] = merged.get(t.exponents, 0) + int(t.coeff)
        terms = tuple(
            DerivProduct(self.level, e, c) for e, c in merged.items() if c != 0)
        # leading term first: highest power of phi', then lexicographic
        terms = tuple(sorted(terms, key=_sort_key))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, level: int, coeffs: Dict[Exponents, int]) -> "DerivPolynomial":
        return cls(level, tuple(DerivProduct(level, e, c) for e, c in coeffs.items()))

    def as_dict(self) -> Dict[Exponents, int]:
        return {t.exponents: t.coeff for t in self.terms}

    def coefficient(self, exponents) -> int:
        return self.as_dict().get(_canon(exponents), 0)

    def render(self) -> str:
        """Text form such as ``4*(d1)^2 - 2*(d2)``."""
        if not self.terms:
            return "0"
        parts = []
        for i, t in enumerate(self.terms):
            c = t.coeff
            mag = abs(c)
            body = t.render() if mag == 1 else f"{mag}*{t.render()}"
            if i == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    __str__ = render

    def evaluate(self, jet: PhiJet, drop_scale: bool = False):
        """Evaluate at derivatives ``jet`` (from :func:`phi_jet`).

        With ``drop_scale`` each product of total degree ``q`` is returned
        divided by ``exp(q * log_scale)``, which is only meaningful when the
        caller normalises consistently.
        """
        d = jet.derivs
        total = np.zeros(d.shape[1:])
        for t in self.terms:
            prod = np.full(d.shape[1:], float(t.coeff))
            for j, m in t.exponents:
                prod = prod * d[j] ** m
            if not drop_scale:
                q = sum(m for _, m in t.exponents)
                with np.errstate(over="ignore", invalid="ignore"):
                    prod = prod * np.exp(q * jet.log_scale)
            total = total + prod
        return _scalar(total)


def _sort_key(t: DerivProduct):
    return (-t.power_of(1), tuple(-m for _, m in t.exponents), t.exponents)


def differentiate_level(p: DerivPolynomial) -> DerivPolynomial:
    """Differentiate ``p(phi)`` in ``r`` by the product rule."""
    out: Dict[Exponents, int] = {}
    for t in p.terms:
        ex = dict(t.exponents)
        for j, m in t.exponents:
            new = dict(ex)
            new[j] = m - 1
            new[j + 1] = new.get(j + 1, 0) + 1
            key = _canon(new)
            out[key] = out.get(key, 0) + t.coeff * m
    return DerivPolynomial.from_dict(p.level + 1, out)


def times_phi1(p: DerivPolynomial, factor: int = 1) -> DerivPolynomial:
    """Multiply by ``factor * phi'`` (raises the level by one)."""
    out = {}
    for t in p.terms:
        ex = dict(t.exponents)
        ex[1] = ex.get(1, 0) + 1
        out[_canon(ex)] = t.coeff * factor
    return DerivPolynomial.from_dict(p.level + 1, out)


def add(p: DerivPolynomial, q: DerivPolynomial) -> DerivPolynomial:
    if p.level != q.level:
        raise ValueError("levels differ")
    return DerivPolynomial(p.level, p.terms + q.terms)


_PN_CACHE: Dict[int, DerivPolynomial] = {}


def build_Pn(n: int) -> DerivPolynomial:
    """Return ``P_n`` with ``w^{(n)} = P_n(phi) exp(-2 phi)``.

    Examples
    --------
    >>> build_Pn(2).render()
    '4*(d1)^2 - 2*(d2)'
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n in _PN_CACHE:
        return _PN_CACHE[n]
    if n == 1:
        p = DerivPolynomial.from_dict(1, {((1, 1),): -2})
    else:
        prev = build_Pn(n - 1)
        p = add(differentiate_level(prev), times_phi1(prev, -2))
    _PN_CACHE[n] = p
    return p


def weight_derivative(spec: WeightSpec, n: int, r):
    """``w^{(n)}(r)`` assembled from the ledger."""
    if n == 0:
        return eval_weight(spec, r)
    jet = phi_jet(spec, n, r)
    return _scalar(np.asarray(build_Pn(n).evaluate(jet)) * np.exp(np.asarray(log_weight(spec, r))))


# ---------------------------------------------------------------------------
# Grid checks


def default_radius_grid(spec: WeightSpec, size: int = 64) -> np.ndarray:
    """Boundary-clustered radii: ``1 - 10^-u`` on the disk, log-spaced on the plane."""
    if spec.family == "TripleExpDisk":
        return -np.expm1(-np.log(10.0) * np.linspace(0.0, 1.3, size))
    if spec.is_disk:
        return -np.expm1(-np.log(10.0) * np.linspace(0.0, 6.0, size))
    return np.logspace(-1.0, 3.0, size)


class LimitTable(NamedTuple):
    radii: np.ndarray
    ratios: np.ndarray
    decays: bool


def check_limit_condition(spec: WeightSpec, n: int, r_grid: Iterable[float] | None = None,
                          tol: float = 1e-2) -> LimitTable:
    """Tabulate ``phi^{(n)} / (phi')^n`` towards the boundary.

    ``decays`` is true when the last ratio is below both the first ratio
    and ``tol`` in absolute value.
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    r = default_radius_grid(spec) if r_grid is None else np.asarray(list(r_grid), float)
    if r.size == 0 or np.any(np.diff(r) <= 0):
        raise DomainError("r_grid must be nonempty and increasing")
    jet = phi_jet(spec, n, r)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = jet.derivs[n] / jet.derivs[1] ** n * np.exp(-(n - 1) * jet.log_scale)
    decays = bool(abs(ratio[-1]) < abs(ratio[0]) and abs(ratio[-1]) < tol)
    return LimitTable(r, ratio, decays)


class SignReport(NamedTuple):
    """``all_nonneg``: nonnegative on a nonempty tail of the grid;
    ``first_nonneg_radius``: start of the longest such tail (nan if none)."""

    all_nonneg: bool
    first_nonneg_radius: float
    radii: np.ndarray
    values: np.ndarray


def check_sign_condition(spec: WeightSpec, n: int, r_grid: Iterable[float] | None = None,
                         max_level: int = MAX_LEVEL) -> SignReport:
    """Sample ``(-1)^n P_n(phi)`` and locate where it becomes nonnegative.

    The sign of ``(-1)^n w^{(n)}`` equals that of ``(-1)^n P_n(phi)``.
    Values are returned divided by ``|phi'|^n`` so that they stay finite.
    """
    if n < 1 or n > max_level:
        raise DomainError(f"level must lie in [1, {max_level}]")
    r = default_radius_grid(spec) if r_grid is None else np.asarray(list(r_grid), float)
    jet = phi_jet(spec, n, r)
    pn = build_Pn(n)
    # divide every term by (phi')^n: scale-free and overflow-safe
    d = jet.derivs
    d1 = np.abs(d[1])
    vals = np.zeros(r.shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for t in pn.terms:
            q = sum(m for _, m in t.exponents)
            prod = np.full(r.shape, float(t.coeff))
            for j, m in t.exponents:
                prod = prod * (d[j] / d1) ** m
            prod = prod * np.exp((q - n) * (jet.log_scale + np.log(d1)))
            vals = vals + prod
    vals = (-1) ** n * vals
    ok = vals >= 0
    if not ok[-1]:
        return SignReport(False, float("nan"), r, vals)
    bad = np.nonzero(~ok)[0]
    start = 0 if bad.size == 0 else bad[-1] + 1
    return SignReport(True, float(r[start]), r, vals)

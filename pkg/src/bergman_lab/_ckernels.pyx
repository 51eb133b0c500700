# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Two kernels live here, mirrored one-for-one by ``_pykernels``:

``log_moments_expdisk``
    Laplace-window Gauss-Legendre quadrature of
    ``int_0^inf exp(-(lam+1) t + n log t - alpha / (1 - e^{-t})) dt``
    for many ``lam`` at once.
``horner_scaled``
    Rescaled Horner evaluation of ``sum_k exp(log_c[k]) u^k``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, expm1, fabs, sqrt, INFINITY, isfinite

cnp.import_array()


cdef inline double _g(double t, double lam1, double a, double n) noexcept nogil:
    cdef double val = -lam1 * t - a / (-expm1(-t))
    if n != 0.0:
        val += n * log(t)
    return val


cdef inline double _dg(double t, double lam1, double a, double n) noexcept nogil:
    cdef double y = exp(-t)
    cdef double om = -expm1(-t)
    return -lam1 + n / t + a * y / (om * om)


cdef inline double _d2g(double t, double lam1, double a, double n) noexcept nogil:
    cdef double y = exp(-t)
    cdef double om = -expm1(-t)
    return -n / (t * t) - a * y * (1.0 + y) / (om * om * om)


cdef double _peak(double lam1, double a, double n, double guess) noexcept nogil:
    cdef double lo = guess, hi = guess, t, d, tn
    cdef int it
    while _dg(lo, lam1, a, n) <= 0.0:
        lo *= 0.25
    while _dg(hi, lam1, a, n) > 0.0:
        hi *= 4.0
    t = guess
    if t <= lo or t >= hi:
        t = sqrt(lo * hi)
    for it in range(200):
        d = _dg(t, lam1, a, n)
        if d > 0.0:
            lo = t
        else:
            hi = t
        tn = t - d / _d2g(t, lam1, a, n)
        if not (tn > lo and tn < hi):
            tn = 0.5 * (lo + hi)
        if fabs(tn - t) <= 1e-15 * t or hi - lo <= 1e-15 * hi:
            return tn
        t = tn
    return t


cdef double _edge(double lam1, double a, double n, double tp, double target,
                  int side) noexcept nogil:
    # g is increasing on (0, tp) and decreasing on (tp, inf)
    cdef double lo, hi, t, f, tn
    cdef int it
    if side < 0:
        lo = 0.5 * tp
        while _g(lo, lam1, a, n) > target:
            lo *= 0.5
        hi = tp
    else:
        hi = 2.0 * tp
        while _g(hi, lam1, a, n) > target:
            hi *= 2.0
        lo = tp
    t = 0.5 * (lo + hi)
    for it in range(300):
        f = _g(t, lam1, a, n) - target
        if (side < 0 and f < 0.0) or (side > 0 and f >= 0.0):
            lo = t
        else:
            hi = t
        tn = t - f / _dg(t, lam1, a, n)
        if not (tn > lo and tn < hi):
            tn = 0.5 * (lo + hi)
        if fabs(tn - t) <= 1e-13 * t or hi - lo <= 1e-14 * hi:
            return tn
        t = tn
    return t


cdef double _panels(double lam1, double a, double n, double gs,
                    double t0, double t1, double t2, int npan,
                    const double[:] x, const double[:] w) noexcept nogil:
    cdef double tot = 0.0, h, c, A, B
    cdef int side, p, j
    cdef Py_ssize_t m = x.shape[0]
    for side in range(2):
        if side == 0:
            A = t0
            B = t1
        else:
            A = t1
            B = t2
        h = (B - A) / npan
        for p in range(npan):
            c = A + (p + 0.5) * h
            for j in range(m):
                tot += 0.5 * h * w[j] * exp(_g(c + 0.5 * h * x[j], lam1, a, n) - gs)
    return tot


def log_moments_expdisk(const double[:] lams, double alpha, double logpow,
                        const double[:] x, const double[:] w, double tol,
                        double drop=45.0, int max_panels=256):
    """Return ``(log_values, rel_err)`` arrays; see the module docstring."""
    cdef Py_ssize_t N = lams.shape[0], i
    out = np.empty(N, dtype=np.float64)
    err = np.empty(N, dtype=np.float64)
    cdef double[:] o = out
    cdef double[:] e = err
    cdef double lam1, tp, gs, tl, th, s_lo, s_hi, rel, tail, guess = -1.0
    cdef int npan
    with nogil:
        for i in range(N):
            lam1 = lams[i] + 1.0
            if guess <= 0.0:
                guess = sqrt(alpha / lam1)
                if logpow / lam1 > guess:
                    guess = logpow / lam1
            tp = _peak(lam1, alpha, logpow, guess)
            guess = tp
            gs = _g(tp, lam1, alpha, logpow)
            tl = _edge(lam1, alpha, logpow, tp, gs - drop, -1)
            th = _edge(lam1, alpha, logpow, tp, gs - drop, 1)
            npan = 2
            s_lo = _panels(lam1, alpha, logpow, gs, tl, tp, th, npan, x, w)
            while True:
                s_hi = _panels(lam1, alpha, logpow, gs, tl, tp, th, 2 * npan, x, w)
                rel = fabs(s_hi - s_lo) / s_hi
                npan *= 2
                if rel <= tol or npan >= max_panels:
                    break
                s_lo = s_hi
            # log-concave tails beyond the window
            tail = tl * exp(_g(tl, lam1, alpha, logpow) - gs)
            tail += exp(_g(th, lam1, alpha, logpow) - gs) / fabs(_dg(th, lam1, alpha, logpow))
            o[i] = gs + log(s_hi)
            e[i] = rel + tail / s_hi
    return out, err


def horner_scaled(const double[:] log_coeffs, const double[:] log_radius,
                  const double complex[:] phase):
    """Evaluate ``sum_k exp(log_coeffs[k]) (r e^{i theta})^k`` per point.

    Returns ``(mantissa, log_scale)`` with value ``mantissa * exp(log_scale)``.
    """
    cdef Py_ssize_t N = log_coeffs.shape[0], P = log_radius.shape[0], i, k
    mant = np.empty(P, dtype=np.complex128)
    scale = np.empty(P, dtype=np.float64)
    cdef double complex[:] mv = mant
    cdef double[:] sv = scale
    cdef double lr, shift, v
    cdef double complex acc, z
    with nogil:
        for i in range(P):
            lr = log_radius[i]
            z = phase[i]
            if not isfinite(lr):
                mv[i] = 1.0
                sv[i] = log_coeffs[0]
                continue
            shift = -INFINITY
            for k in range(N):
                v = log_coeffs[k] + k * lr
                if v > shift:
                    shift = v
            acc = 0.0
            for k in range(N - 1, -1, -1):
                acc = acc * z + exp(log_coeffs[k] + k * lr - shift)
            mv[i] = acc
            sv[i] = shift
    return mant, scale

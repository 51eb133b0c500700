"""Pure-numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Same signatures, same algorithms; vectorised over the batch axis instead of
looping in C.
"""
import numpy as np


def _g(t, lam1, a, n):
    val = -lam1 * t - a / (-np.expm1(-t))
    if n != 0.0:
        val = val + n * np.log(t)
    return val


def _dg(t, lam1, a, n):
    y = np.exp(-t)
    om = -np.expm1(-t)
    return -lam1 + n / t + a * y / (om * om)


def _d2g(t, lam1, a, n):
    y = np.exp(-t)
    om = -np.expm1(-t)
    return -n / (t * t) - a * y * (1.0 + y) / (om * om * om)


def _safeguarded_newton(f, df, t, lo, hi, rtol, maxit, increasing):
    for _ in range(maxit):
        fv = f(t)
        if increasing:
            lo = np.where(fv < 0.0, t, lo)
            hi = np.where(fv >= 0.0, t, hi)
        else:
            lo = np.where(fv >= 0.0, t, lo)
            hi = np.where(fv < 0.0, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - fv / df(t)
        bad = ~((tn > lo) & (tn < hi))
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        done = (np.abs(tn - t) <= rtol * t) | (hi - lo <= rtol * hi)
        t = tn
        if np.all(done):
            break
    return t


def _peak(lam1, a, n):
    guess = np.maximum(np.sqrt(a / lam1), n / lam1)
    lo = guess.copy()
    hi = guess.copy()
    while True:
        m = _dg(lo, lam1, a, n) <= 0.0
        if not m.any():
            break
        lo = np.where(m, lo * 0.25, lo)
    while True:
        m = _dg(hi, lam1, a, n) > 0.0
        if not m.any():
            break
        hi = np.where(m, hi * 4.0, hi)
    # dg is decreasing: treat -dg as the increasing function
    return _safeguarded_newton(
        lambda t: -_dg(t, lam1, a, n),
        lambda t: -_d2g(t, lam1, a, n),
        guess, lo, hi, 1e-15, 200, increasing=True,
    )


def _edge(lam1, a, n, tp, target, side):
    if side < 0:
        lo = 0.5 * tp
        while True:
            m = _g(lo, lam1, a, n) > target
            if not m.any():
                break
            lo = np.where(m, lo * 0.5, lo)
        hi = tp.copy()
        increasing = True
    else:
        hi = 2.0 * tp
        while True:
            m = _g(hi, lam1, a, n) > target
            if not m.any():
                break
            hi = np.where(m, hi * 2.0, hi)
        lo = tp.copy()
        increasing = False
    return _safeguarded_newton(
        lambda t: _g(t, lam1, a, n) - target,
        lambda t: _dg(t, lam1, a, n),
        0.5 * (lo + hi), lo, hi, 1e-13, 300, increasing,
    )


def _panels(lam1, a, n, gs, t0, t1, t2, npan, x, w):
    tot = np.zeros_like(gs)
    for A, B in ((t0, t1), (t1, t2)):
        h = (B - A) / npan
        for p in range(npan):
            c = A + (p + 0.5) * h
            tt = c[:, None] + 0.5 * h[:, None] * x[None, :]
            vals = np.exp(_g(tt, lam1[:, None], a, n) - gs[:, None])
            tot += 0.5 * h * (vals @ w)
    return tot


def log_moments_expdisk(lams, alpha, logpow, x, w, tol, drop=45.0, max_panels=256):
    lams = np.ascontiguousarray(lams, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.empty_like(lams)
    err = np.empty_like(lams)
    chunk = 200_000
    for start in range(0, lams.size, chunk):
        lam1 = lams[start:start + chunk] + 1.0
        tp = _peak(lam1, alpha, logpow)
        gs = _g(tp, lam1, alpha, logpow)
        tl = _edge(lam1, alpha, logpow, tp, gs - drop, -1)
        th = _edge(lam1, alpha, logpow, tp, gs - drop, 1)
        npan = 2
        s_lo = _panels(lam1, alpha, logpow, gs, tl, tp, th, npan, x, w)
        s_hi = _panels(lam1, alpha, logpow, gs, tl, tp, th, 2 * npan, x, w)
        rel = np.abs(s_hi - s_lo) / s_hi
        npan *= 2
        todo = rel > tol
        while todo.any() and npan < max_panels:
            idx = np.nonzero(todo)[0]
            prev = s_hi[idx]
            new = _panels(lam1[idx], alpha, logpow, gs[idx], tl[idx], tp[idx],
                          th[idx], 2 * npan, x, w)
            s_hi[idx] = new
            rel[idx] = np.abs(new - prev) / new
            npan *= 2
            todo = rel > tol
        tail = tl * np.exp(_g(tl, lam1, alpha, logpow) - gs)
        tail += np.exp(_g(th, lam1, alpha, logpow) - gs) / np.abs(_dg(th, lam1, alpha, logpow))
        out[start:start + chunk] = gs + np.log(s_hi)
        err[start:start + chunk] = rel + tail / s_hi
    return out, err


def horner_scaled(log_coeffs, log_radius, phase):
    log_coeffs = np.asarray(log_coeffs, dtype=np.float64)
    log_radius = np.asarray(log_radius, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.complex128)
    N = log_coeffs.size
    finite = np.isfinite(log_radius)
    lr = np.where(finite, log_radius, 0.0)
    k = np.arange(N, dtype=np.float64)
    shift = np.full(lr.shape, -np.inf)
    for start in range(0, N, 4096):
        blk = log_coeffs[start:start + 4096][None, :] + k[start:start + 4096][None, :] * lr[:, None]
        shift = np.maximum(shift, blk.max(axis=1))
    acc = np.zeros(lr.shape, dtype=np.complex128)
    for j in range(N - 1, -1, -1):
        acc = acc * phase + np.exp(log_coeffs[j] + j * lr - shift)
    mant = np.where(finite, acc, 1.0 + 0j)
    scale = np.where(finite, shift, log_coeffs[0])
    return mant, scale

"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so no environment variable is needed.
Also checks that the two return the same numbers.
"""
import argparse
import timeit

import numpy as np
from numpy.polynomial.legendre import leggauss

from bergman_lab import _pykernels

try:
    from bergman_lab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases():
    x, w = leggauss(16)
    rng = np.random.default_rng(0)
    lams = np.logspace(0, 7, 2000)
    lc = -np.cumsum(rng.uniform(0, 0.01, 4000))
    lr = np.log(rng.uniform(0.5, 0.999, 2000))
    ph = np.exp(1j * rng.uniform(0, 2 * np.pi, 2000))
    yield ("log_moments_expdisk (2000 lambdas)", "log_moments_expdisk",
           (lams, 1.0, 1.0, x, w, 1e-13))
    yield ("log_moments_expdisk (1 lambda)", "log_moments_expdisk",
           (lams[1000:1001], 1.0, 1.0, x, w, 1e-13))
    yield ("horner_scaled (4000 terms x 2000 points)", "horner_scaled", (lc, lr, ph))
    yield ("horner_scaled (400 terms x 1 point)", "horner_scaled", (lc[:400], lr[:1], ph[:1]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the fallback can be timed")
    print(f"{'kernel':44s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for label, name, argv in cases():
        py = getattr(_pykernels, name)
        number = 200 if np.size(argv[-1] if name == "horner_scaled" else argv[0]) == 1 else 1
        t_py = min(timeit.repeat(lambda: py(*argv), number=number, repeat=args.repeat)) / number
        if _ckernels is None:
            print(f"{label:44s} {t_py:11.3e}")
            continue
        cy = getattr(_ckernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*argv), number=number, repeat=args.repeat)) / number
        a, b = np.asarray(py(*argv)[0]), np.asarray(cy(*argv)[0])
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1.0)))
        print(f"{label:44s} {t_py:11.3e} {t_cy:11.3e} {t_py / t_cy:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()

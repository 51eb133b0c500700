"""Recompute the observed values behind the constants in ``bergman_lab.calibration``.

    python3 benchmarks/calibrate.py            # quick quantities (seconds)
    python3 benchmarks/calibrate.py --heavy    # adds M1, Schur and operator norms (~10 min)

Prints each observed value next to the recorded constant so a change in a
numerical method can be checked against the bands.
"""
import argparse
import math

import numpy as np

from bergman_lab import calibration as cal
from bergman_lab.errors import LabError
from bergman_lab.fenchel import inverse_lf_ratio, series_boundary_asymptote
from bergman_lab.kernel import (M1Profile, build_kernel, integral_mean_M1, m1_asymptote,
                                m1_lower_bound, suggest_n_max)
from bergman_lab.moments import moment, moment_asymptote, moment_table
from bergman_lab.projection import (assemble_projection, default_r_grid, opnorm_lower,
                                    polar_grid, schur_scan)
from bergman_lab.smooth_sums import cesaro_ratio
from bergman_lab.weights import WeightSpec


def show(name, observed, recorded):
    print(f"{name:34s} observed {observed:<40s} recorded {recorded}")


def quick():
    gap = abs(moment(WeightSpec.exp_disk(2.0), 1e4).log_value - float(moment_asymptote(2.0, 1e4)))
    show("MOMENT_LOG_BAND", f"{gap:.4f}", f"{cal.MOMENT_LOG_BAND:.4f}")

    lam = np.logspace(2, 6, 41)
    spread = drift = 0.0
    for a in (1.0, 2.0):
        for n in (0, 1, 2):
            r = moment_table(WeightSpec.exp_disk(a), lam, n).ratios
            spread = max(spread, r.max() / r.min())
            last = r[lam >= 1e5]
            drift = max(drift, last.max() / last.min() - 1)
    show("MOMENT_RATIO_SPREAD", f"{spread:.4f}", cal.MOMENT_RATIO_SPREAD)
    show("MOMENT_RATIO_DRIFT", f"{drift:.2e}", cal.MOMENT_RATIO_DRIFT)

    t = np.logspace(-4, -2, 9)
    q = np.concatenate([inverse_lf_ratio(a, t) for a in (0.5, 1.0, 2.0)])
    show("INVERSE_LF_RATIO_BAND", f"[{q.min():.4f}, {q.max():.4f}]", cal.INVERSE_LF_RATIO_BAND)

    s = [series_boundary_asymptote(1.0, rho).ratio for rho in (0.9, 0.99, 0.995, 0.999)]
    show("SERIES_RATIO_BAND", f"[{min(s):.4f}, {max(s):.4f}]", cal.SERIES_RATIO_BAND)

    model = build_kernel(1.0, suggest_n_max(1.0, 0.9801))
    worst, where = 0.0, None
    for r in (0.5, 0.7, 0.81, 0.9, 0.95, 0.9801):
        for n in range(3, 12):
            try:
                c = cesaro_ratio(model, r, n)
            except LabError:  # block beyond the table
                continue
            if c > worst:
                worst, where = c, (r, n)
    show("CESARO_KAPPA", f"{worst:.4f} at (r, n) = {where}", cal.CESARO_KAPPA)


def heavy():
    rho = np.linspace(0.9, 0.9995, 12)
    model = build_kernel(1.0, suggest_n_max(1.0, float(rho[-1]) ** 2))
    ratio, lower = [], []
    for rh in rho:
        r = float(rh * rh)
        la = float(m1_asymptote(1.0, r, log=True))
        ratio.append(math.exp(integral_mean_M1(model, r).log_value - la))
        lower.append(math.exp(m1_lower_bound(model, r, log=True) - la))
    show("M1_BAND", f"[{min(ratio):.4f}, {max(ratio):.4f}]", cal.M1_BAND)
    show("M1_LOWER_FLOOR", f"min {min(lower):.4f}", cal.M1_LOWER_FLOOR)

    radii = default_r_grid(13, 3.0)
    m = build_kernel(1.0, suggest_n_max(1.0, float(radii[-1])))
    prof = M1Profile(m, float(radii[-1]), 64, rtol=1e-6)
    show("SCHUR_PLATEAU", f"{schur_scan(prof, radii).plateau_ratio:.4f}", cal.SCHUR_PLATEAU)
    show("FULL_WEIGHT_GROWTH", f"{schur_scan(prof, radii, 'full_weight').growth:.4g}",
         cal.FULL_WEIGHT_GROWTH)

    res = (64, 512)
    km = build_kernel(1.0, 4 * res[-1] + 16)
    val = {(mode, p, n): opnorm_lower(assemble_projection(km, polar_grid(n), mode, p)).value
           for mode in ("full_weight", "half_weight") for p in (2.0, 4.0) for n in res}
    show("OPNORM_GROWTH", f"{val['full_weight', 4.0, 512] / val['full_weight', 4.0, 64]:.4g}",
         cal.OPNORM_GROWTH)
    show("OPNORM_STABLE", f"{val['half_weight', 4.0, 512] / val['half_weight', 4.0, 64]:.4f}",
         cal.OPNORM_STABLE)
    p2 = max(v for k, v in val.items() if k[1] == 2.0) - 1
    show("OPNORM_P2_SLACK", f"{p2:.2e}", cal.OPNORM_P2_SLACK)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--heavy", action="store_true", help="include the slow quantities")
    args = ap.parse_args()
    quick()
    if args.heavy:
        heavy()


if __name__ == "__main__":
    main()

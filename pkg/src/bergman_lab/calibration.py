"""Empirical constants recorded from calibration runs.

Each constant notes how it was obtained.  ``benchmarks/calibrate.py``
recomputes the observed values after a change to a numerical method.
"""

# |log v_lam - log asymptote| for ExpDisk(alpha=2), lam=1e4 sits at 0.27;
# band fixed at log(3).
MOMENT_LOG_BAND = 1.0986122886681098

# max/min of v_lam / asymptote over lam in 1e2..1e6 and drift over the last decade
MOMENT_RATIO_SPREAD = 10.0
MOMENT_RATIO_DRIFT = 0.05

# exp(u(t)) / (sqrt(t) e^{alpha/t}) -> alpha^{-1/4}; band for t <= 0.01
INVERSE_LF_RATIO_BAND = (0.5, 2.0)

# series / boundary asymptote ratios approach about 2.15 for alpha = 1
SERIES_RATIO_BAND = (1.0, 5.0)

# two-sided target for M1 / asymptote over rho in [0.9, 0.9995]
M1_BAND = 5.0
# positive floor for (2 pi max_k c_k r^k) / asymptote over the same grid
M1_LOWER_FLOOR = 5.0

# max of ||W^Phi_1 * V_n||_{H^1} / (A_{Phi,2} ||V_n||_{H^1}) over
# r in {0.5, 0.7, 0.81, 0.9, 0.95, 0.9801}, n >= 3, alpha = 1
CESARO_KAPPA = 0.85  # observed max 0.811 (r=0.81, n=6)

# Schur plateau: max/median over the r-grid must stay below this
SCHUR_PLATEAU = 2.0
# full-weight pairing must grow by more than this factor across the grid
FULL_WEIGHT_GROWTH = 10.0

# operator-norm dichotomy
OPNORM_GROWTH = 10.0
OPNORM_STABLE = 2.0
OPNORM_P2_SLACK = 0.05

"""Experiment runners behind the command-line front end.

Each runner takes a validated :class:`ExperimentConfig`, calls the library
operations and returns tables plus pass/fail verdicts for the acceptance
criteria it covers.  Runners never write files; :mod:`cli` does that.
"""
from __future__ import annotations

import contextlib
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Sequence

import numpy as np

from . import calibration as cal
from .errors import ConfigError, DomainError
from .fenchel import lf_closed_form, lf_transform
from .fock import (build_fock_kernel, class_s_check, eval_fock_kernel, fock_n_max,
                   fock_schur_integral)
from .kernel import (M1Profile, build_kernel, integral_mean_M1, m1_asymptote, m1_lower_bound,
                     suggest_n_max)
from .moments import fock_moment, moment_table
from .projection import (assemble_projection, default_r_grid, ident2_residual, ident2_terms,
                         opnorm_lower, piecewise_bounds, polar_grid, schur_scan)
from .smooth_sums import hadamard, n_blocks_for, vn_block, vn_norm_scaling
from .weights import WeightSpec, build_Pn, check_sign_condition, weight_derivative

EXPERIMENTS = ("moments", "fenchel", "kernel-means", "schur", "piecewise", "opnorm-contrast",
               "vn-norms", "fock-schur", "class-s", "deriv-ledger")

CRITERIA = {
    1: "moment asymptotics",
    2: "Legendre-Fenchel closed forms",
    3: "integral-mean estimate",
    4: "Schur plateau versus the full-weight pairing",
    5: "algebraic identity for the Schur exponent",
    6: "piecewise bounds of the Schur integrand",
    7: "smooth block norm scaling",
    8: "operator-norm dichotomy",
    9: "derivative ledger",
    10: "Gaussian Fock oracle",
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "moments": {"alphas": [1.0, 2.0], "logpows": [0, 1, 2], "lambda_min": 1e2,
                "lambda_max": 1e6, "n_lambda": 41, "tol": 1e-12},
    "fenchel": {"alphas": [1.0, 2.0], "ns": [0, 1, 2], "xs": [1e1, 1e3, 1e5],
                "rtol": 1e-8, "fy_tol": 1e-9, "n_probe": 200},
    "kernel-means": {"rho_min": 0.9, "rho_max": 0.9995, "n_points": 12, "tol": 1e-12,
                     "rtol": 1e-6},
    "schur": {"n_radii": 13, "depth": 3.0, "profile_points": 64, "profile_rtol": 1e-6,
              "tol": 1e-12},
    "piecewise": {"radii": [0.9, 0.99, 0.999, 0.9999], "n_pairs": 1000,
                  "residual_tol": 1e-12},
    "opnorm-contrast": {"resolutions": [64, 128, 256, 512], "ps": [1.5, 2.0, 4.0],
                        "modes": ["full_weight", "half_weight"], "iterations": 32, "restarts": 8},
    "vn-norms": {"ps": [0.5, 1.0, 2.0, 4.0], "n_min": 3, "n_max": 12, "slope_tol": 0.1,
                 "n_polys": 5, "max_degree": 600, "recon_tol": 1e-12},
    "fock-schur": {"t_grid": list(np.linspace(0.0, 5.0, 10)), "kernel_radius": 20.0,
                   "n_kernel_points": 40, "kernel_tol": 1e-12, "n_moments": 20,
                   "moment_tol": 1e-10, "schur_tol": 1e-6, "monomial_m": 4.0,
                   "monomial_t_grid": list(np.linspace(0.0, 6.0, 13)), "include_monomial": False},
    "class-s": {"families": [{"family": "FockGaussian"}, {"family": "FockMonomial", "m": 4.0},
                             {"family": "FockMonomial", "m": 3.0}],
                "x_min": 1.0, "x_max": 1e6, "n_x": 61, "eta": 0.0},
    "deriv-ledger": {"n_max": 6, "n_radii": 20, "r_min": 0.05, "r_max": 0.95,
                     "fd_rtol": 1e-4, "render_max": 8},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment request."""

    experiment: str
    weight: WeightSpec = field(default_factory=lambda: WeightSpec.exp_disk(1.0))
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "results"

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        exp = data.pop("experiment", None)
        if exp not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
        try:
            default = ({"family": "FockGaussian"} if exp in ("fock-schur", "class-s")
                       else {"family": "ExpDisk", "alpha": 1.0})
            weight = WeightSpec.from_dict(data.pop("weight", default))
        except (DomainError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad weight: {exc}") from exc
        params = dict(DEFAULTS[exp])
        extra = data.pop("params", {}) or {}
        unknown = set(extra) - set(params)
        if unknown:
            raise ConfigError(f"unknown parameters for {exp}: {sorted(unknown)}")
        params.update(_numeric(extra))
        seed = data.pop("seed", 0)
        out = data.pop("output_dir", "results")
        if data:
            raise ConfigError(f"unknown config keys: {sorted(data)}")
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        cfg = cls(exp, weight, params, seed, str(out))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key, val in self.params.items():
            if "tol" in key and not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key} must be positive, got {val!r}")
            if isinstance(val, (list, tuple)) and len(val) == 0:
                raise ConfigError(f"grid {key} must be nonempty")

    def to_dict(self) -> Dict[str, Any]:
        return {"experiment": self.experiment, "weight": self.weight.to_dict(),
                "params": _plain(self.params), "seed": self.seed}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _numeric(obj):
    """Turn strings such as ``"1e-12"`` (not floats under YAML 1.1) into floats."""
    if isinstance(obj, dict):
        return {k: _numeric(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_numeric(v) for v in obj]
    if isinstance(obj, str):
        try:
            return float(obj)
        except ValueError:
            return obj
    return obj


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


class Table(NamedTuple):
    name: str
    columns: Sequence[str]
    rows: List[Sequence[Any]]
    source: str
    plot_x: str | None = None
    plot_y: Sequence[str] = ()
    logscale: str = ""


class Verdict(NamedTuple):
    criterion: int
    passed: bool
    detail: str


@dataclass
class RunContext:
    """Records the operation in progress so failures can name it."""

    operation: str = ""
    tables: List[Table] = field(default_factory=list)
    verdicts: List[Verdict] = field(default_factory=list)

    @contextlib.contextmanager
    def step(self, operation: str):
        prev = self.operation
        self.operation = operation
        yield
        self.operation = prev


def _alpha(cfg: ExperimentConfig) -> float:
    if cfg.weight.family != "ExpDisk":
        raise ConfigError(f"{cfg.experiment} needs an ExpDisk weight")
    return cfg.weight.alpha


# ---------------------------------------------------------------------------
# Runners


def run_moments(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    lam = np.logspace(math.log10(p["lambda_min"]), math.log10(p["lambda_max"]), int(p["n_lambda"]))
    rows, notes, ok = [], [], True
    for a in p["alphas"]:
        for n in p["logpows"]:
            with ctx.step("moments.moment_table"):
                tab = moment_table(WeightSpec.exp_disk(a), lam, int(n), tol=p["tol"])
            ratio = tab.ratios
            spread = float(ratio.max() / ratio.min())
            last = lam >= lam[-1] / 10
            drift = float(ratio[last].max() / ratio[last].min() - 1)
            good = spread < cal.MOMENT_RATIO_SPREAD and drift < cal.MOMENT_RATIO_DRIFT
            ok &= good
            notes.append(f"a={a:g},n={n}: spread {spread:.3f}, drift {drift:.2e}")
            rows += [(a, n) + r for r in tab.rows()]
    ctx.tables.append(Table("moments", ("alpha", "n", "lambda", "log_value", "err",
                                        "log_asymptote", "ratio"), rows, "moments.moment_table",
                            "lambda", ("ratio",), "x"))
    ctx.verdicts.append(Verdict(1, ok, "; ".join(notes)))


def run_fenchel(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows, worst_rel, worst_fy, worst_probe = [], 0.0, 0.0, 0.0
    for a in p["alphas"]:
        for n in p["ns"]:
            v = lambda t, a=a, n=n: a / t - n * math.log(t)
            for x in p["xs"]:
                with ctx.step("fenchel.lf_transform"):
                    res = lf_transform(v, x)
                exact = float(lf_closed_form(a, int(n), x))
                rel = abs(res.value - exact) / abs(exact)
                fy = abs(v(res.minimizer_t) + x * res.minimizer_t - exact) / abs(exact)
                ts = np.exp(rng.uniform(math.log(1e-8), math.log(1e4), int(p["n_probe"])))
                slack = min((v(t) + x * t - exact) / abs(exact) for t in ts)
                worst_rel, worst_fy = max(worst_rel, rel), max(worst_fy, fy)
                worst_probe = min(worst_probe, slack)
                rows.append((a, n, x, res.value, exact, rel, res.minimizer_t, fy, slack))
    ctx.tables.append(Table("fenchel", ("alpha", "n", "x", "numeric", "closed_form", "rel_err",
                                        "minimizer_t", "fy_gap", "min_probe_slack"), rows,
                            "fenchel.lf_transform", "x", ("numeric", "closed_form"), "xy"))
    ok = worst_rel <= p["rtol"] and worst_fy <= p["fy_tol"] and worst_probe >= -p["fy_tol"]
    ctx.verdicts.append(Verdict(2, ok, f"max rel err {worst_rel:.2e}, Fenchel-Young gap "
                                       f"{worst_fy:.2e}, min probe slack {worst_probe:.2e}"))


def run_kernel_means(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p, a = cfg.params, _alpha(cfg)
    rho = np.linspace(p["rho_min"], p["rho_max"], int(p["n_points"]))
    with ctx.step("kernel.build_kernel"):
        model = build_kernel(a, suggest_n_max(a, float(rho[-1] ** 2), p["tol"]), p["tol"])
    rows = []
    for rh in rho:
        r = float(rh * rh)
        with ctx.step("kernel.integral_mean_M1"):
            m1 = integral_mean_M1(model, r, rtol=p["rtol"])
        la = float(m1_asymptote(a, r, log=True))
        lo = m1_lower_bound(model, r, log=True)
        rows.append((float(rh), r, m1.log_value, la, math.exp(m1.log_value - la),
                     math.exp(lo - la), m1.n_angles, m1.n_terms))
    ratio = np.array([row[4] for row in rows])
    lower = np.array([row[5] for row in rows])
    band_ok = bool(np.all(ratio <= cal.M1_BAND) and np.all(1 / ratio <= cal.M1_BAND))
    floor_ok = bool(np.all(lower >= cal.M1_LOWER_FLOOR))
    ctx.tables.append(Table("kernel_means", ("rho", "r", "log_M1", "log_asymptote", "ratio",
                                             "lower_ratio", "n_angles", "n_terms"), rows,
                            "kernel.integral_mean_M1", "rho", ("ratio", "lower_ratio")))
    ctx.verdicts.append(Verdict(3, band_ok and floor_ok,
                                f"M1/asymptote in [{ratio.min():.3f}, {ratio.max():.3f}] "
                                f"(band {cal.M1_BAND:g}); lower/asymptote min {lower.min():.3f} "
                                f"(floor {cal.M1_LOWER_FLOOR:g})"))


def run_schur(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p, a = cfg.params, _alpha(cfg)
    radii = default_r_grid(int(p["n_radii"]), float(p["depth"]))
    r_max = float(radii[-1])
    with ctx.step("kernel.build_kernel"):
        model = build_kernel(a, suggest_n_max(a, r_max, p["tol"]), p["tol"])
    with ctx.step("kernel.M1Profile"):
        prof = M1Profile(model, r_max, int(p["profile_points"]), float(p["profile_rtol"]))
    with ctx.step("projection.schur_integral"):
        half = schur_scan(prof, radii, "half_weight")
        full = schur_scan(prof, radii, "full_weight")
    rows = [(float(r), float(x), float(y)) for r, x, y in zip(radii, half.values, full.values)]
    ctx.tables.append(Table("schur", ("r", "I_half_weight", "I_full_weight"), rows,
                            "projection.schur_integral", "r", ("I_half_weight", "I_full_weight"),
                            "y"))
    mono = bool(np.all(np.diff(full.values) > 0))
    ok = half.plateau_ratio < cal.SCHUR_PLATEAU and mono and full.growth > cal.FULL_WEIGHT_GROWTH
    ctx.verdicts.append(Verdict(4, ok, f"plateau max/median {half.plateau_ratio:.3f}; "
                                       f"full-weight growth {full.growth:.3g}, monotone {mono}"))


def run_piecewise(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    a = cfg.weight.alpha if cfg.weight.family == "ExpDisk" else 1.0
    rng = np.random.default_rng(cfg.seed)
    n = int(p["n_pairs"])
    r, s = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
    with ctx.step("projection.ident2_residual"):
        lhs, rhs, scale = ident2_terms(r, s)
        res = ident2_residual(r, s)
    lhs, rhs = lhs.astype(float), rhs.astype(float)
    ctx.tables.append(Table("ident2", ("r", "s", "lhs", "rhs", "residual"),
                            list(zip(r, s, lhs, rhs, res)), "projection.ident2_residual"))
    worst = float(np.abs(res).max())
    ctx.verdicts.append(Verdict(5, worst < p["residual_tol"] and bool(np.all(lhs <= 0)),
                                f"max residual {worst:.2e}; max lhs {lhs.max():.3e}"))
    rows = []
    for rr in p["radii"]:
        with ctx.step("projection.piecewise_bounds"):
            b = piecewise_bounds(a, float(rr))
        rows.append((b.r, b.low, b.middle, b.upper, b.between, b.middle_crude, b.total))
    ctx.tables.append(Table("piecewise", ("r", "low", "middle", "upper", "between",
                                          "middle_crude", "total"), rows,
                            "projection.piecewise_bounds", "r",
                            ("low", "middle", "upper", "between")))
    arr = np.array([row[1:5] for row in rows])
    ok = bool(np.all(np.isfinite(arr)) and np.all(arr[-1] < 2 * np.median(arr, axis=0)))
    ctx.verdicts.append(Verdict(6, ok, "last/median per piece: " + ", ".join(
        f"{x:.3f}" for x in arr[-1] / np.where(np.median(arr, axis=0) > 0,
                                              np.median(arr, axis=0), 1.0))))


def run_opnorm(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p, a = cfg.params, _alpha(cfg)
    res_list = [int(x) for x in p["resolutions"]]
    with ctx.step("kernel.build_kernel"):
        model = build_kernel(a, 4 * max(res_list) + 16)
    rows, table = [], {}
    for mode in p["modes"]:
        for pp in p["ps"]:
            for n in res_list:
                with ctx.step("projection.opnorm_lower"):
                    proj = assemble_projection(model, polar_grid(n), mode, float(pp))
                    out = opnorm_lower(proj, int(p["iterations"]), cfg.seed, int(p["restarts"]))
                rows.append((mode, float(pp), n, out.value, out.mode_index))
                table[(mode, float(pp), n)] = out.value
    ctx.tables.append(Table("opnorm_contrast", ("mode", "p", "resolution", "opnorm_lower",
                                                "mode_index"), rows, "projection.opnorm_lower",
                            "resolution", ("opnorm_lower",), "xy"))
    notes, ok = [], True
    first, last = res_list[0], res_list[-1]
    if ("full_weight", 4.0, last) in table:
        g = table[("full_weight", 4.0, last)] / table[("full_weight", 4.0, first)]
        ok &= g > cal.OPNORM_GROWTH
        notes.append(f"full-weight p=4 growth {g:.3g}")
    for pp in (1.5, 4.0):
        vals = [table[k] for k in table if k[0] == "half_weight" and k[1] == pp]
        if vals:
            f = max(vals) / min(vals)
            ok &= f < cal.OPNORM_STABLE
            notes.append(f"half-weight p={pp:g} variation {f:.4f}")
    p2 = [table[k] for k in table if k[1] == 2.0]
    if p2:
        ok &= max(p2) <= 1 + cal.OPNORM_P2_SLACK
        notes.append(f"p=2 max {max(p2):.6f}")
    ctx.verdicts.append(Verdict(8, bool(ok), "; ".join(notes)))


def run_vn_norms(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    ns = range(int(p["n_min"]), int(p["n_max"]) + 1)
    rows, norm_rows, ok, notes = [], [], True, []
    for pp in p["ps"]:
        with ctx.step("smooth_sums.vn_norm_scaling"):
            sc = vn_norm_scaling(float(pp), ns)
        good = abs(sc.slope - sc.expected) <= p["slope_tol"]
        ok &= good
        rows.append((float(pp), sc.slope, sc.expected, sc.slope - sc.expected))
        norm_rows += [(float(pp), int(n), float(v)) for n, v in zip(sc.ns, sc.norms)]
        notes.append(f"p={pp:g}: slope {sc.slope:.4f} vs {sc.expected:.4f}")
    worst = 0.0
    with ctx.step("smooth_sums.hadamard"):
        for _ in range(int(p["n_polys"])):
            deg = int(rng.integers(1, int(p["max_degree"])))
            f = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
            rec = sum(hadamard(f, vn_block(k)) for k in range(n_blocks_for(deg)))
            worst = max(worst, float(np.abs(rec - f).max()))
    ok &= worst <= p["recon_tol"]
    notes.append(f"reconstruction error {worst:.1e}")
    ctx.tables.append(Table("vn_slopes", ("p", "slope", "expected", "deviation"), rows,
                            "smooth_sums.vn_norm_scaling"))
    ctx.tables.append(Table("vn_norms", ("p", "n", "norm"), norm_rows, "smooth_sums.vn_norm",
                            "n", ("norm",), "y"))
    ctx.verdicts.append(Verdict(7, bool(ok), "; ".join(notes)))


def _class_rows(spec: WeightSpec, rep) -> List[tuple]:
    return [(str(spec), float(x), float(a), float(b), float(c), float(q))
            for x, a, b, c, q in zip(rep.x, rep.d1, rep.d2, rep.d3, rep.ratio)]


def run_fock_schur(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    g = WeightSpec.fock_gaussian()
    t = np.asarray(p["t_grid"], dtype=float)
    R = float(p["kernel_radius"])
    need = max(R, float(t.max()) * (2 * float(t.max()) + 10))
    with ctx.step("fock.build_fock_kernel"):
        model = build_fock_kernel(g, fock_n_max(g, need))
    k = int(p["n_kernel_points"])
    u = R * np.sqrt(rng.uniform(0, 1, k)) * np.exp(2j * np.pi * rng.uniform(0, 1, k))
    u = np.concatenate([u, [R, -R, 1j * R, -1j * R, 0.0]])
    with ctx.step("fock.eval_fock_kernel"):
        kv = eval_fock_kernel(model, u)
    kerr = np.abs(kv - np.exp(u)) / np.exp(np.abs(u))
    with ctx.step("moments.fock_moment"):
        mom = [(n, math.exp(fock_moment(g, n, tol=1e-13).log_value)) for n in range(int(p["n_moments"]) + 1)]
    merr = max(abs(v / math.factorial(n) - 1) for n, v in mom)
    with ctx.step("fock.fock_schur_integral"):
        sch = fock_schur_integral(model, t)
    serr = float(np.abs(sch.values - 2.0).max())
    ctx.tables.append(Table("fock_schur", ("t", "I", "rel_err"),
                            list(zip(t, sch.values, sch.errs)), "fock.fock_schur_integral",
                            "t", ("I",)))
    ctx.tables.append(Table("fock_moments", ("n", "moment", "factorial"),
                            [(n, v, float(math.factorial(n))) for n, v in mom],
                            "moments.fock_moment"))
    members = {}
    for spec in (g, WeightSpec.fock_monomial(4.0), WeightSpec.fock_monomial(3.0)):
        with ctx.step("fock.class_s_check"):
            members[spec.to_dict().get("m", 0.0)] = class_s_check(spec).in_class
    class_ok = members[0.0] and members[4.0] and not members[3.0]
    if p["include_monomial"]:
        sm = WeightSpec.fock_monomial(float(p["monomial_m"]))
        tm = np.asarray(p["monomial_t_grid"], dtype=float)
        with ctx.step("fock.fock_schur_integral"):
            mm = build_fock_kernel(sm, fock_n_max(sm, float(tm.max()) * (2 * float(tm.max()) + 10)))
            ms = fock_schur_integral(mm, tm)
        ctx.tables.append(Table("fock_schur_monomial", ("t", "I", "rel_err"),
                                list(zip(tm, ms.values, ms.errs)), "fock.fock_schur_integral",
                                "t", ("I",)))
    ok = (kerr.max() <= p["kernel_tol"] and merr <= p["moment_tol"] and serr <= p["schur_tol"]
          and class_ok)
    ctx.verdicts.append(Verdict(10, bool(ok),
                                f"kernel err {kerr.max():.1e}; moment err {merr:.1e}; Schur err "
                                f"{serr:.1e}; class members gaussian={members[0.0]}, "
                                f"m4={members[4.0]}, m3={members[3.0]}"))


def run_class_s(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p = cfg.params
    x = np.logspace(math.log10(p["x_min"]), math.log10(p["x_max"]), int(p["n_x"]))
    rows, summary = [], []
    for fam in p["families"]:
        spec = WeightSpec.from_dict(fam)
        with ctx.step("fock.class_s_check"):
            rep = class_s_check(spec, x, float(p["eta"]))
        rows += _class_rows(spec, rep)
        summary.append((str(spec), rep.d1_positive, rep.d2_nonneg, rep.d3_nonneg,
                        rep.ratio_bounded, rep.in_class))
    ctx.tables.append(Table("class_s", ("weight", "x", "d1", "d2", "d3", "ratio"), rows,
                            "fock.class_s_check"))
    ctx.tables.append(Table("class_s_summary", ("weight", "d1_positive", "d2_nonneg",
                                                "d3_nonneg", "ratio_bounded", "member"),
                            summary, "fock.class_s_check"))


def _fd_oracle(spec: WeightSpec, n: int, r: float) -> float:
    import mpmath

    with mpmath.workdps(60):
        if spec.family == "ExpDisk":
            f = lambda x: mpmath.exp(-spec.alpha / (1 - x))
        elif spec.family == "GenExpDisk":
            f = lambda x: (1 - x * x) ** spec.A * mpmath.exp(-spec.B / (1 - x * x) ** spec.kappa)
        elif spec.family == "TripleExpDisk":
            f = lambda x: mpmath.exp(-mpmath.exp(mpmath.exp(1 / (1 - x))))
        elif spec.family == "FockMonomial":
            f = lambda x: mpmath.exp(-2 * x ** spec.m)
        else:
            f = lambda x: mpmath.exp(-x * x)
        return float(mpmath.diff(f, mpmath.mpf(r), n))


def run_deriv_ledger(cfg: ExperimentConfig, ctx: RunContext) -> None:
    p, spec = cfg.params, cfg.weight
    rng = np.random.default_rng(cfg.seed)
    nmax = int(p["n_max"])
    radii = np.sort(rng.uniform(p["r_min"], p["r_max"], int(p["n_radii"])))
    rows, worst, lead_ok = [], 0.0, True
    for n in range(1, nmax + 1):
        for r in radii:
            with ctx.step("weights.weight_derivative"):
                val = float(weight_derivative(spec, n, float(r)))
            ref = _fd_oracle(spec, n, float(r))
            rel = abs(val - ref) / abs(ref) if ref != 0 else abs(val)
            worst = max(worst, rel)
            rows.append((n, float(r), val, ref, rel))
    ledger_rows, sign_rows, sign_ok = [], [], True
    for n in range(1, int(p["render_max"]) + 1):
        pn = build_Pn(n)
        lead = pn.coefficient(((1, n),))
        lead_ok &= (n > nmax) or lead == (-2) ** n
        ledger_rows.append((n, len(pn.terms), lead, pn.render()))
    if spec.family == "ExpDisk":
        for n in range(1, nmax + 1):
            with ctx.step("weights.check_sign_condition"):
                rep = check_sign_condition(spec, n)
            sign_ok &= rep.all_nonneg
            sign_rows.append((n, rep.first_nonneg_radius, rep.all_nonneg))
    ctx.tables.append(Table("deriv_check", ("n", "r", "ledger", "oracle", "rel_err"), rows,
                            "weights.weight_derivative"))
    ctx.tables.append(Table("deriv_ledger", ("n", "n_terms", "leading_coeff", "P_n"),
                            ledger_rows, "weights.build_Pn"))
    if sign_rows:
        ctx.tables.append(Table("sign_onset", ("n", "a_n", "holds"), sign_rows,
                                "weights.check_sign_condition", "n", ("a_n",)))
    ok = worst <= p["fd_rtol"] and lead_ok and sign_ok
    onset = ", ".join(f"a_{n}={a:.3f}" for n, a, _ in sign_rows)
    ctx.verdicts.append(Verdict(9, bool(ok), f"max rel err {worst:.1e}; leading coefficients "
                                             f"{'ok' if lead_ok else 'wrong'}; {onset}"))


RUNNERS: Dict[str, Callable[[ExperimentConfig, RunContext], None]] = {
    "moments": run_moments,
    "fenchel": run_fenchel,
    "kernel-means": run_kernel_means,
    "schur": run_schur,
    "piecewise": run_piecewise,
    "opnorm-contrast": run_opnorm,
    "vn-norms": run_vn_norms,
    "fock-schur": run_fock_schur,
    "class-s": run_class_s,
    "deriv-ledger": run_deriv_ledger,
}


def run_experiment(cfg: ExperimentConfig) -> RunContext:
    ctx = RunContext()
    RUNNERS[cfg.experiment](cfg, ctx)
    return ctx

"""Command-line front end: ``bergman-lab <experiment> [options]`` and ``bergman-lab report``.

Exit codes: 0 when every criterion checked passes, 1 when one fails,
2 on configuration or execution errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Dict, List, Sequence

import yaml

from . import __version__
from .errors import ConfigError
from .experiments import CRITERIA, EXPERIMENTS, ExperimentConfig, RunContext, Table, RUNNERS

OUTPUT_ENV = "BERGMAN_LAB_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
_UMASK = os.umask(0)
os.umask(_UMASK)


# ---------------------------------------------------------------------------
# File emission


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _fmt(v.item())
    return str(v)


def csv_text(table: Table, cfg: ExperimentConfig, wall: float, partial: bool) -> str:
    buf = io.StringIO()
    header = {
        "tool": f"bergman-lab {__version__}",
        "experiment": cfg.experiment,
        "table": table.name,
        "source": table.source,
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "wall_time_s": f"{wall:.3f}",
    }
    if partial:
        header["partial"] = "true"
    for k, v in header.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def plot_script(table: Table) -> str | None:
    """Gnuplot command file drawing ``plot_y`` against ``plot_x``."""
    if not table.plot_x or not table.plot_y:
        return None
    cols = list(table.columns)
    x = cols.index(table.plot_x) + 1
    lines = ["set datafile separator ','", "set datafile commentschars '#'",
             "set key autotitle columnhead", f"set xlabel '{table.plot_x}'",
             "set terminal pngcairo size 900,600", f"set output '{table.name}.png'"]
    if table.logscale:
        lines.append(f"set logscale {table.logscale}")
    plots = [f"'{table.name}.csv' using {x}:{cols.index(y) + 1} with linespoints title '{y}'"
             for y in table.plot_y]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def emit(out_dir: Path, cfg: ExperimentConfig, ctx: RunContext, wall: float,
         status: str, error: Dict[str, str] | None = None) -> None:
    partial = status != "ok"
    for t in ctx.tables:
        atomic_write(out_dir / f"{t.name}.csv", csv_text(t, cfg, wall, partial))
        gp = plot_script(t)
        if gp:
            atomic_write(out_dir / f"{t.name}.gp", gp)
    verdict = {
        "tool": f"bergman-lab {__version__}",
        "experiment": cfg.experiment,
        "status": status,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "wall_time_s": round(wall, 3),
        "tables": [t.name for t in ctx.tables],
        "criteria": {str(v.criterion): {"title": CRITERIA[v.criterion], "passed": bool(v.passed),
                                        "detail": v.detail} for v in ctx.verdicts},
    }
    if error:
        verdict["error"] = error
    atomic_write(out_dir / f"{cfg.experiment}.verdict.json",
                 json.dumps(verdict, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Config resolution


def _parse_set(items: Sequence[str]) -> Dict[str, Any]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: Dict[str, Any] = {}
    if args.config:
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
    data["experiment"] = args.command
    params = dict(data.get("params") or {})
    params.update(_parse_set(args.set))
    if args.tol is not None:
        for key in [k for k in params if "tol" in k] or ["tol"]:
            params[key] = args.tol
    data["params"] = params
    if args.alpha is not None:
        data["weight"] = {"family": "ExpDisk", "alpha": args.alpha}
    if args.seed is not None:
        data["seed"] = args.seed
    out = args.output_dir or os.environ.get(OUTPUT_ENV) or data.get("output_dir") or "results"
    data["output_dir"] = out
    return ExperimentConfig.from_mapping(data)


# ---------------------------------------------------------------------------
# Commands


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out_dir = Path(cfg.output_dir)
    ctx = RunContext()
    t0 = time.perf_counter()
    try:
        RUNNERS[cfg.experiment](cfg, ctx)
    except Exception as exc:  # propagate as a flagged partial run
        wall = time.perf_counter() - t0
        op = ctx.operation or cfg.experiment
        print(f"error in {op}: {type(exc).__name__}: {exc}", file=sys.stderr)
        emit(out_dir, cfg, ctx, wall, "error",
             {"operation": op, "type": type(exc).__name__, "message": str(exc)})
        return EXIT_ERROR
    wall = time.perf_counter() - t0
    emit(out_dir, cfg, ctx, wall, "ok")
    for v in ctx.verdicts:
        print(f"criterion {v.criterion} ({CRITERIA[v.criterion]}): "
              f"{'PASS' if v.passed else 'FAIL'} - {v.detail}")
    print(f"wrote {len(ctx.tables)} table(s) to {out_dir} in {wall:.1f} s")
    return EXIT_OK if all(v.passed for v in ctx.verdicts) else EXIT_FAIL


def build_report(out_dir: Path) -> tuple[str, int]:
    found: Dict[int, Dict[str, Any]] = {}
    errors: List[str] = []
    for path in sorted(out_dir.glob("*.verdict.json")) if out_dir.is_dir() else []:
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            errors.append(f"{path.name}: unreadable ({exc})")
            continue
        if data.get("status") != "ok":
            err = data.get("error", {})
            errors.append(f"{data.get('experiment')}: failed in {err.get('operation')} "
                          f"({err.get('message')})")
        for key, val in data.get("criteria", {}).items():
            found[int(key)] = dict(val, experiment=data.get("experiment"),
                                   config_hash=data.get("config_hash"))
    lines = [f"# Acceptance summary ({out_dir})", "",
             f"{len(found)} of {len(CRITERIA)} criteria evaluated.", ""]
    for c in sorted(found):
        v = found[c]
        lines.append(f"- criterion {c} ({CRITERIA[c]}): {'PASS' if v['passed'] else 'FAIL'} "
                     f"- {v['detail']} [{v['experiment']}, config {v['config_hash']}]")
    missing = [c for c in CRITERIA if c not in found]
    if missing:
        lines += ["", "Missing criteria:"]
        lines += [f"- criterion {c} ({CRITERIA[c]})" for c in missing]
    if errors:
        lines += ["", "Failed or partial runs:"] + [f"- {e}" for e in errors]
    text = "\n".join(lines) + "\n"
    ok = not missing and not errors and all(v["passed"] for v in found.values())
    return text, EXIT_OK if ok else EXIT_FAIL


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "results")
    text, code = build_report(out_dir)
    if out_dir.is_dir():
        atomic_write(out_dir / "summary.md", text)
    print(text, end="")
    return code


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bergman-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"bergman-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--output-dir", help=f"output directory (overrides ${OUTPUT_ENV})")
        p.add_argument("--seed", type=int)
        p.add_argument("--alpha", type=float, help="ExpDisk alpha (replaces the weight)")
        p.add_argument("--tol", type=float, help="set every tolerance parameter")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one experiment parameter (YAML value)")
        p.set_defaults(func=cmd_run)
    p = sub.add_parser("report", help="summarise verdicts found in an output directory")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

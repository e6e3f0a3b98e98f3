"""Command line harness: simulate, analyze, calibrate, optimize, sweep.

Every command writes its artifacts into one output directory (--out,
falling back to $SNAPJET_OUT_DIR, then the working directory) together
with a run manifest recording the exact command line, a digest of the
fully resolved configuration, the tool version and the files written.
Reruns with the same config and flags reproduce byte-identical outputs;
only the manifest timestamp differs.

Exit codes are a stable contract: 0 success, 1 usage or configuration
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                            # 3.10
    import tomli as tomllib

from . import __version__
from .analysis import (TraceError, build_report, read_force_csv,
                       report_to_dict, write_band_csv, write_report_json)
from .calibrate import (calibrate, load_targets_file, result_to_dict,
                        write_fitted_config)
from .optimize import (BoundedParameter, DesignVector, Objective,
                       ObjectiveKind, OptimizationMethod, optimize,
                       sweep_metrics)
from .params import (ConfigError, InvariantViolation, ScenarioKind,
                     StrokeDirection, load_config, params_to_toml, validate)
from .sim import (NumericalDivergence, run_scenario, write_trace_csv,
                  write_trace_json)

_SCENARIOS = {
    "free-swim": ScenarioKind.FREE_SWIM,
    "fixed-mount": ScenarioKind.FIXED_MOUNT,
}


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; our contract reserves 2
    for numerical failures, so remap usage problems to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("SNAPJET_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config_digest(params) -> str:
    return hashlib.sha256(params_to_toml(params).encode()).hexdigest()


def _settings_digest(settings: dict) -> str:
    text = json.dumps(settings, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _write_manifest(out: Path, argv, digest: str, outputs: list[str]) -> None:
    doc = {
        "command": list(argv),
        "config_sha256": digest,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
    }
    (out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _load_scenario_config(args):
    """Resolve --config/--scenario/--cycles into a validated parameter set."""
    params = load_config(args.config)
    scenario = params.scenario
    if getattr(args, "scenario", None):
        scenario = replace(scenario, kind=_SCENARIOS[args.scenario])
    if getattr(args, "cycles", None) is not None:
        scenario = replace(scenario, n_cycles=args.cycles)
    params = replace(params, scenario=scenario)
    problems = validate(params)
    if problems:
        raise ConfigError("; ".join(problems))
    return params


# ---------------------------------------------------------------------------
# SVG line plots (no plotting dependency; a polyline per series)
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 720, 360
_SVG_PAD = 50
_SVG_COLORS = ("#1f6fb4", "#c44e52", "#55a868")


def _svg_line_plot(path: Path, series, title: str,
                   x_label: str, y_label: str) -> None:
    """series: iterable of (name, xs, ys) drawn on shared axes."""
    series = [(n, list(xs), list(ys)) for n, xs, ys in series]
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    span_x = (_SVG_W - 2 * _SVG_PAD) / (x_hi - x_lo)
    span_y = (_SVG_H - 2 * _SVG_PAD) / (y_hi - y_lo)

    def to_px(x, y):
        return (_SVG_PAD + (x - x_lo) * span_x,
                _SVG_H - _SVG_PAD - (y - y_lo) * span_y)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.0f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    ax_x0, ax_y0 = to_px(x_lo, y_lo)
    ax_x1, ax_y1 = to_px(x_hi, y_hi)
    parts.append(f'<line x1="{ax_x0:.1f}" y1="{ax_y0:.1f}" '
                 f'x2="{ax_x1:.1f}" y2="{ax_y0:.1f}" stroke="#444"/>')
    parts.append(f'<line x1="{ax_x0:.1f}" y1="{ax_y0:.1f}" '
                 f'x2="{ax_x0:.1f}" y2="{ax_y1:.1f}" stroke="#444"/>')
    for value, px, py, anchor, dy in (
            (x_lo, ax_x0, ax_y0 + 16, "middle", 0),
            (x_hi, ax_x1, ax_y0 + 16, "middle", 0),
            (y_lo, ax_x0 - 6, ax_y0, "end", 4),
            (y_hi, ax_x0 - 6, ax_y1, "end", 4)):
        parts.append(f'<text x="{px:.1f}" y="{py + dy:.1f}" '
                     f'text-anchor="{anchor}" font-family="sans-serif" '
                     f'font-size="11">{value:.4g}</text>')
    parts.append(f'<text x="{_SVG_W / 2:.0f}" y="{_SVG_H - 10}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">{x_label}</text>')
    parts.append(f'<text x="14" y="{_SVG_H / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 14 {_SVG_H / 2:.0f})">{y_label}</text>')
    for i, (name, xs, ys) in enumerate(series):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        points = " ".join("%.1f,%.1f" % to_px(x, y) for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" '
                     f'stroke="{color}" stroke-width="1.2"/>')
        if len(series) > 1:
            parts.append(f'<text x="{_SVG_W - _SVG_PAD:.0f}" '
                         f'y="{_SVG_PAD + 14 * i:.0f}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11" '
                         f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args, argv) -> int:
    params = _load_scenario_config(args)
    out = _out_dir(args)
    trajectory = run_scenario(params)

    outputs = []
    if args.format == "json":
        write_trace_json(trajectory, out / "trace.json")
        outputs.append("trace.json")
    else:
        write_trace_csv(trajectory, out / "trace.csv")
        outputs.append("trace.csv")
    if args.svg:
        _svg_line_plot(out / "trace.svg",
                       [("thrust", trajectory.time, trajectory.thrust)],
                       "thrust trace", "time [s]", "thrust [N]")
        outputs.append("trace.svg")
    _write_manifest(out, argv, _config_digest(params), outputs)
    print(f"wrote {', '.join(outputs)}: {len(trajectory.time)} samples, "
          f"{trajectory.snap_count} snaps, net displacement "
          f"{trajectory.net_displacement():.4g} m")
    return 0


def _cmd_analyze(args, argv) -> int:
    direction = StrokeDirection(args.direction) if args.direction else None
    traces, failures = [], []
    for name in args.traces:
        try:
            traces.append(read_force_csv(name, direction=direction))
        except (TraceError, OSError) as exc:
            failures.append(f"{name}: {exc}")
    for line in failures:
        print(line, file=sys.stderr)
    if not traces:
        print("no readable traces", file=sys.stderr)
        return 1

    out = _out_dir(args)
    report = build_report(traces, direction=direction,
                          synchronize=not args.no_sync)
    write_report_json(report, out / "report.json")
    outputs = ["report.json"]
    if args.band:
        write_band_csv(report, out / "band.csv")
        outputs.append("band.csv")
    if args.svg:
        upper = report.mean_force + report.band_2sigma
        lower = report.mean_force - report.band_2sigma
        _svg_line_plot(out / "report.svg",
                       [("mean", report.times, report.mean_force),
                        ("+2s", report.times, upper),
                        ("-2s", report.times, lower)],
                       "mean stroke force", "time [s]", "force [N]")
        outputs.append("report.svg")
    settings = {"traces": [Path(n).name for n in args.traces],
                "direction": args.direction, "sync": not args.no_sync}
    _write_manifest(out, argv, _settings_digest(settings), outputs)

    print(f"{report.trial_count} trials, peak "
          f"{report.peak_force:.3f} N at {report.peak_time * 1e3:.0f} ms")
    for name, phase in report.phases.items():
        print(f"  {name:8s} {phase.duration * 1e3:7.1f} ms  "
              f"{phase.impulse:+.4f} N s")
    print(f"  total impulse {report.total_impulse:+.4f} N s")
    return 0


def _cmd_calibrate(args, argv) -> int:
    base = load_config(args.config)
    targets, free, start, fit = load_targets_file(args.targets)
    if args.budget is not None:
        fit["budget"] = args.budget
    if args.seed is not None:
        fit["seed"] = args.seed
    result = calibrate(base, targets, free, start=start,
                       jobs=args.jobs, **fit)

    out = _out_dir(args)
    doc = result_to_dict(result)
    (out / "calibration.json").write_text(json.dumps(doc, indent=2,
                                                     sort_keys=True) + "\n")
    outputs = ["calibration.json"]
    if result.overlay:
        write_fitted_config(base, result, out / "fitted.toml")
        outputs.append("fitted.toml")
    _write_manifest(out, argv, _config_digest(base), outputs)

    for row in result.residuals:
        print(f"  {row.name:22s} target {row.target:10.4g}  "
              f"sim {row.simulated:10.4g}  residual {row.residual:+7.2%}")
    status = "feasible" if result.feasible else "infeasible"
    print(f"{status}, {result.evaluations} evaluations, "
          f"max residual {result.max_abs_residual:.2%}")
    return 0


def _load_bounds_file(path: str):
    """[bounds] and optional [start] tables, same shape as a targets file."""
    doc = tomllib.loads(Path(path).read_text())
    if "bounds" not in doc or not doc["bounds"]:
        raise ConfigError(f"{path}: missing [bounds] table")
    free = tuple(BoundedParameter(key, float(lo), float(hi))
                 for key, (lo, hi) in sorted(doc["bounds"].items()))
    start = {str(k): float(v) for k, v in doc.get("start", {}).items()}
    unknown = set(start) - {p.path for p in free}
    if unknown:
        raise ConfigError(f"{path}: start keys without bounds: "
                          + ", ".join(sorted(unknown)))
    return free, start


def _cmd_optimize(args, argv) -> int:
    params = load_config(args.config)
    free, start = _load_bounds_file(args.bounds)
    x0 = tuple(start.get(p.path, 0.5 * (p.lower + p.upper)) for p in free)
    x0 = tuple(p.clip(v) for p, v in zip(free, x0))
    objective = Objective(kind=ObjectiveKind(args.objective), params=params,
                          horizon_cycles=args.cycles)
    out = _out_dir(args)
    result = optimize(DesignVector(free, x0), objective, budget=args.budget,
                      method=OptimizationMethod(args.method), seed=args.seed,
                      jobs=args.jobs, log_path=out / "evals.csv")

    overlay = result.design.as_overlay()
    doc = {
        "objective": args.objective,
        "method": args.method,
        "score": result.score,
        "feasible": result.feasible,
        "evaluations": result.evaluations,
        "overlay": overlay,
        "metrics": result.metrics,
    }
    (out / "optimize.json").write_text(json.dumps(doc, indent=2,
                                                  sort_keys=True) + "\n")
    lines = ["# best design overlay; merge over the base configuration"]
    for path_key, value in overlay.items():
        lines.append(f'"{path_key}" = {value!r}')
    (out / "best.toml").write_text("\n".join(lines) + "\n")
    outputs = ["evals.csv", "optimize.json", "best.toml"]
    _write_manifest(out, argv, _config_digest(params), outputs)

    print(f"{args.objective}: score {result.score:.6g} "
          f"({'feasible' if result.feasible else 'infeasible'}, "
          f"{result.evaluations} evaluations)")
    for path_key, value in overlay.items():
        print(f"  {path_key} = {value:.6g}")
    return 0


def _cmd_sweep(args, argv) -> int:
    params = load_config(args.config)
    if args.steps < 1:
        raise ConfigError("--steps must be >= 1")
    if args.steps == 1:
        values = [0.5 * (args.lo + args.hi)]
    else:
        step = (args.hi - args.lo) / (args.steps - 1)
        values = [args.lo + i * step for i in range(args.steps)]
    rows = sweep_metrics(params, args.param, values,
                         horizon_cycles=args.cycles, jobs=args.jobs)

    columns = [args.param]
    seen = {"value"}
    for row in rows:
        for key in row:
            if key not in seen:
                seen.add(key)
                columns.append(key)
    out = _out_dir(args)
    with (out / "sweep.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            record = {**row, args.param: row["value"]}
            writer.writerow(["%.9g" % record[c] if c in record else ""
                             for c in columns])
    _write_manifest(out, argv, _config_digest(params), ["sweep.csv"])
    print(f"swept {args.param} over [{args.lo:g}, {args.hi:g}] "
          f"in {args.steps} steps -> sweep.csv")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(parser, config=True):
    if config:
        parser.add_argument("--config", help="configuration file "
                            "(defaults shipped with the package)")
    parser.add_argument("--out", help="output directory "
                        "(default $SNAPJET_OUT_DIR or '.')")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snapjet",
                     description="bistable pulse-jet swimmer toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate a scenario, export trace")
    _add_common(p)
    p.add_argument("--scenario", choices=sorted(_SCENARIOS))
    p.add_argument("--cycles", type=int, help="override scenario.n_cycles")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg", action="store_true", help="also plot the trace")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("analyze", help="trial CSVs -> stroke report")
    _add_common(p, config=False)
    p.add_argument("traces", nargs="+", help="force trace CSV files")
    p.add_argument("--direction", choices=[d.value for d in StrokeDirection])
    p.add_argument("--band", action="store_true",
                   help="also write mean +/- 2 sigma CSV")
    p.add_argument("--no-sync", action="store_true",
                   help="skip peak synchronization")
    p.add_argument("--svg", action="store_true", help="also plot the report")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("calibrate", help="fit bounded parameters to targets")
    _add_common(p)
    p.add_argument("--targets", required=True, help="targets file "
                   "([targets]/[bounds]/[start]/[fit])")
    p.add_argument("--budget", type=int, help="override the file's budget")
    p.add_argument("--seed", type=int, help="override the file's seed")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("optimize", help="search a design box")
    _add_common(p)
    p.add_argument("--bounds", required=True,
                   help="bounds file ([bounds], optional [start])")
    p.add_argument("--objective", required=True,
                   choices=[k.value for k in ObjectiveKind])
    p.add_argument("--method", default="nelder-mead",
                   choices=[m.value for m in OptimizationMethod])
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--cycles", type=int, default=3,
                   help="free-swim horizon per evaluation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_optimize)

    p = sub.add_parser("sweep", help="metrics vs one parameter")
    _add_common(p)
    p.add_argument("--param", required=True,
                   help="dotted path, e.g. engine.barrier_peak_force "
                        "or stroke.contraction_duration")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--cycles", type=int, default=3,
                   help="free-swim horizon per evaluation")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, ["snapjet"] + argv)
    except (ConfigError, InvariantViolation, TraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalDivergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Fit plant parameters against bench and free-swim measurements.

Targets are scalar metrics of the real robot: per-direction peak
thrust and phase impulses from fixed-mount strokes, plus free-swim
peak/average speed.  The fitter reuses the derivative-free search in
optimize.py to minimize the sum of squared normalized residuals
(sim - target) / target; a zero target falls back to the absolute
residual.

Simulated metrics mirror the bench protocol: a two-cycle fixed-mount
run yields one upstroke (hub driven to +a) and one downstroke (hub to
-a), each reduced with the stroke-analysis pipeline; a three-cycle
free-swim run yields the speed metrics.  The well tilt parameter is
the model's stand-in for the real robot's up/down asymmetry.

Calibration is a fit, not a prediction: with the free parameters
bounded but unmeasured, matching the targets shows the model can
represent the robot, not that it predicts an unseen one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .analysis import ForceTrace, TraceError, build_report
from .optimize import (BoundedParameter, Evaluation, OptimizationMethod,
                       WORST_SCORE, minimize)
from .params import (ConfigError, Pair, ParameterSet, ScenarioKind,
                     StrokeDirection, apply_overlay, params_to_toml, validate)
from .sim import NumericalDivergence, average_speed, run_scenario, \
    speed_profile

METRIC_NAMES = (
    "peak_thrust_down", "peak_thrust_up",
    "impulse_intake_down", "impulse_jet_down", "impulse_rebound_down",
    "impulse_intake_up", "impulse_jet_up", "impulse_rebound_up",
    "peak_speed", "avg_speed",
)
# compact aliases accepted in targets files for the three stroke phases
_PHASE_ALIASES = {"A": "intake", "B": "jet", "C": "rebound"}

_THRUST_METRICS = frozenset(n for n in METRIC_NAMES
                            if n.startswith(("peak_thrust", "impulse")))
_SPEED_METRICS = frozenset(("peak_speed", "avg_speed"))


def canonical_metric_name(name: str) -> str:
    parts = name.split("_")
    if len(parts) == 3 and parts[0] == "impulse" and parts[1] in _PHASE_ALIASES:
        name = "_".join((parts[0], _PHASE_ALIASES[parts[1]], parts[2]))
    if name not in METRIC_NAMES:
        raise ConfigError(f"unknown calibration target {name!r}; known: "
                          + ", ".join(METRIC_NAMES))
    return name


@dataclass(frozen=True)
class CalibrationTargets:
    values: dict[str, float]

    def __post_init__(self):
        canon = {canonical_metric_name(k): float(v)
                 for k, v in self.values.items()}
        if not canon:
            raise ConfigError("targets must contain at least one metric")
        object.__setattr__(self, "values", canon)


@dataclass(frozen=True)
class TargetResidual:
    name: str
    target: float
    simulated: float
    residual: float               # normalized unless the target is 0


@dataclass(frozen=True)
class CalibrationResult:
    overlay: dict[str, float]     # fitted parameter values by dotted path
    residuals: tuple[TargetResidual, ...]
    score: float
    feasible: bool
    evaluations: int
    log: tuple[Evaluation, ...]

    @property
    def max_abs_residual(self) -> float:
        return max((abs(r.residual) for r in self.residuals), default=math.nan)


# ---------------------------------------------------------------------------
# simulated metrics
# ---------------------------------------------------------------------------

def _stroke_report(times: np.ndarray, forces: np.ndarray,
                   direction: StrokeDirection):
    trace = ForceTrace(times=times, forces=forces, direction=direction,
                       label=direction.value)
    return build_report([trace])


def fixed_mount_metrics(params: ParameterSet) -> dict[str, float]:
    """Per-direction thrust metrics from a two-cycle fixed-mount run.

    Cycle 0 powers the first pair (top by default), driving the hub to
    +a: the upstroke.  Cycle 1 is the downstroke.
    """
    scenario = replace(params.scenario, kind=ScenarioKind.FIXED_MOUNT,
                       n_cycles=2, duration=None)
    trajectory = run_scenario(replace(params, scenario=scenario))
    period = params.power.cycle_period
    out: dict[str, float] = {}
    # the first powered pair drags the hub to its own stop: top pair up
    first_up = scenario.first_active_pair is Pair.TOP
    first_dir = StrokeDirection.UPSTROKE if first_up \
        else StrokeDirection.DOWNSTROKE
    second_dir = StrokeDirection.DOWNSTROKE if first_up \
        else StrokeDirection.UPSTROKE
    windows = ((first_dir, 0.0, period),
               (second_dir, period, 2.0 * period))
    for direction, t_lo, t_hi in windows:
        mask = (trajectory.time >= t_lo) & (trajectory.time < t_hi)
        report = _stroke_report(trajectory.time[mask],
                                trajectory.thrust[mask], direction)
        tag = "down" if direction is StrokeDirection.DOWNSTROKE else "up"
        out[f"peak_thrust_{tag}"] = report.peak_force
        for phase in ("intake", "jet", "rebound"):
            out[f"impulse_{phase}_{tag}"] = report.phases[phase].impulse
    return out


def free_swim_metrics(params: ParameterSet) -> dict[str, float]:
    scenario = replace(params.scenario, kind=ScenarioKind.FREE_SWIM,
                       n_cycles=3, duration=None)
    trajectory = run_scenario(replace(params, scenario=scenario))
    _, speeds = speed_profile(trajectory)
    return {
        "peak_speed": float(np.max(np.abs(speeds))),
        "avg_speed": average_speed(trajectory),
    }


def simulated_metrics(params: ParameterSet,
                      names) -> dict[str, float]:
    """The requested calibration metrics for one parameter set."""
    wanted = {canonical_metric_name(n) for n in names}
    out: dict[str, float] = {}
    if wanted & _THRUST_METRICS:
        out.update(fixed_mount_metrics(params))
    if wanted & _SPEED_METRICS:
        out.update(free_swim_metrics(params))
    return {n: out[n] for n in wanted}


def make_targets(params: ParameterSet, names) -> CalibrationTargets:
    """Targets generated by the model itself (round-trip checks)."""
    return CalibrationTargets(simulated_metrics(params, names))


# ---------------------------------------------------------------------------
# residuals and fitting
# ---------------------------------------------------------------------------

def compute_residuals(simulated: dict[str, float],
                      targets: CalibrationTargets
                      ) -> tuple[TargetResidual, ...]:
    rows = []
    for name, target in sorted(targets.values.items()):
        sim = simulated[name]
        residual = (sim - target) / target if target != 0.0 else sim - target
        rows.append(TargetResidual(name=name, target=target, simulated=sim,
                                   residual=residual))
    return tuple(rows)


def residual_score(residuals) -> float:
    return math.fsum(r.residual ** 2 for r in residuals)


def _calibration_fn(values, parameters, base, targets):
    """(score, feasible, metrics) for one candidate; picklable."""
    overlay = {p.path: v for p, v in zip(parameters, values)}
    candidate = apply_overlay(base, overlay)
    try:
        simulated = simulated_metrics(candidate, targets.values.keys())
    except (NumericalDivergence, TraceError):
        return WORST_SCORE, False, {}
    if any(not math.isfinite(v) for v in simulated.values()):
        return WORST_SCORE, False, {}
    rows = compute_residuals(simulated, targets)
    return residual_score(rows), True, dict(simulated)


def calibrate(base: ParameterSet, targets: CalibrationTargets,
              free: tuple[BoundedParameter, ...],
              start: dict[str, float] | None = None,
              budget: int = 400, warm_samples: int = 0, seed: int = 0,
              jobs: int = 1, log_path=None) -> CalibrationResult:
    """Fit the free parameters to the targets.

    Optional warm start: warm_samples seeded random draws pick the best
    starting point, then the simplex search spends the rest of the
    budget refining it.  An infeasible calibration (nothing snapped
    anywhere in the search) is reported through the feasible flag and
    best-seen residuals, not an exception.
    """
    if not free:
        simulated = simulated_metrics(base, targets.values.keys())
        rows = compute_residuals(simulated, targets)
        return CalibrationResult(overlay={}, residuals=rows,
                                 score=residual_score(rows), feasible=True,
                                 evaluations=0, log=())

    for p in free:
        if p.path.startswith("stroke."):
            raise ConfigError("calibration fits plant parameters, not the "
                              "stroke surrogate")
    x0 = np.array([start.get(p.path, _midpoint(p)) if start else _midpoint(p)
                   for p in free])
    x0 = np.clip(x0, [p.lower for p in free], [p.upper for p in free])
    base_overlay = {p.path: v for p, v in zip(free, x0)}
    problems = validate(apply_overlay(base, base_overlay))
    if problems:
        raise ConfigError("starting design invalid: " + "; ".join(problems))

    import functools
    fn = functools.partial(_calibration_fn, parameters=free, base=base,
                           targets=targets)

    def extend(log, stage_log):
        for record in stage_log:
            log.append(replace(record, index=len(log)))

    log: list[Evaluation] = []
    score0, feasible0, metrics0 = fn(tuple(x0))
    log.append(Evaluation(index=0, values=tuple(float(v) for v in x0),
                          score=score0, feasible=feasible0, metrics=metrics0))
    if warm_samples > 0 and budget > len(log):
        warm_best, warm_log = minimize(
            fn, free, x0, min(warm_samples, budget - len(log)),
            method=OptimizationMethod.RANDOM, seed=seed, jobs=jobs)
        extend(log, warm_log)
        if warm_best is not None and warm_best.feasible \
                and (not feasible0 or warm_best.score < score0):
            x0 = np.array(warm_best.values)

    remaining = budget - len(log)
    if remaining >= len(free) + 1:
        _, nm_log = minimize(fn, free, x0, remaining,
                             method=OptimizationMethod.NELDER_MEAD,
                             seed=seed, log_path=log_path)
        extend(log, nm_log)
    feasible_evals = [e for e in log if e.feasible]
    if feasible_evals:
        best = min(feasible_evals, key=lambda e: e.score)
        overlay = {p.path: v for p, v in zip(free, best.values)}
        rows = compute_residuals(best.metrics, targets)
        return CalibrationResult(overlay=overlay, residuals=rows,
                                 score=best.score, feasible=True,
                                 evaluations=len(log), log=tuple(log))
    # nothing feasible: report the starting point's (non-)metrics honestly
    rows = tuple(TargetResidual(name=n, target=t, simulated=math.nan,
                                residual=math.nan)
                 for n, t in sorted(targets.values.items()))
    overlay = {p.path: v for p, v in zip(free, x0)}
    return CalibrationResult(overlay=overlay, residuals=rows,
                             score=WORST_SCORE, feasible=False,
                             evaluations=len(log), log=tuple(log))


def _midpoint(p: BoundedParameter) -> float:
    return 0.5 * (p.lower + p.upper)


# ---------------------------------------------------------------------------
# targets files and reports
# ---------------------------------------------------------------------------

def load_targets_file(path: str | Path):
    """Parse a targets document (TOML, or JSON by extension).

    Sections: [targets] metric = value; [bounds] "dotted.path" =
    [lo, hi]; optional [start] "dotted.path" = value and [fit] with
    budget / warm_samples / seed keys.  Returns (targets, free
    parameters, start map, fit options).
    """
    p = Path(path)
    if p.suffix.lower() == ".json":
        doc = json.loads(p.read_text())
    else:
        with p.open("rb") as handle:
            doc = tomllib.load(handle)
    unknown = set(doc) - {"targets", "bounds", "start", "fit"}
    if unknown:
        raise ConfigError(f"{p}: unknown sections {sorted(unknown)}")
    if "targets" not in doc:
        raise ConfigError(f"{p}: missing [targets] section")
    targets = CalibrationTargets(dict(doc["targets"]))
    free = []
    for dotted, bounds in doc.get("bounds", {}).items():
        if not (isinstance(bounds, (list, tuple)) and len(bounds) == 2):
            raise ConfigError(f"{p}: bounds for {dotted} must be [lo, hi]")
        free.append(BoundedParameter(dotted, float(bounds[0]),
                                     float(bounds[1])))
    start = {k: float(v) for k, v in doc.get("start", {}).items()}
    for dotted in start:
        if dotted not in {f.path for f in free}:
            raise ConfigError(f"{p}: start value for unbounded path {dotted}")
    fit = dict(doc.get("fit", {}))
    allowed = {"budget", "warm_samples", "seed"}
    if set(fit) - allowed:
        raise ConfigError(f"{p}: unknown fit options "
                          f"{sorted(set(fit) - allowed)}")
    return targets, tuple(free), start, fit


def result_to_dict(result: CalibrationResult) -> dict:
    return {
        "feasible": result.feasible,
        "score": result.score if math.isfinite(result.score) else None,
        "evaluations": result.evaluations,
        "overlay": dict(result.overlay),
        "residuals": [
            {"name": r.name, "target": r.target,
             "simulated": None if math.isnan(r.simulated) else r.simulated,
             "residual": None if math.isnan(r.residual) else r.residual}
            for r in result.residuals
        ],
    }


def write_fitted_config(base: ParameterSet, result: CalibrationResult,
                        path: str | Path) -> None:
    """Full config with the fitted overlay applied, loadable as-is."""
    fitted = apply_overlay(base, result.overlay)
    Path(path).write_text(
        "# calibration output: base configuration with the fitted\n"
        "# parameter overlay applied\n\n" + params_to_toml(fitted))

"""Derivative-free search over design and protocol parameters.

Designs are flat maps from dotted parameter paths (power.on_duration,
engine.barrier_peak_force, ...) to values inside box bounds.  Scores
come from full free-swim simulations, except that designs built purely
from the virtual stroke.* paths are evaluated with the closed-form
single-stroke jet model instead, which makes the tau^-2 thrust law
directly searchable without the plant in the loop.

Everything minimizes; the MAX_* objective kinds negate their metric.
Infeasible designs (no snap-through, or no forward travel for the
energy objective) score +inf and carry a feasibility flag, and the
search never returns an infeasible design when a feasible one was
seen.  Bounds are enforced by projection, so every evaluated and
returned design respects them exactly.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import hydro
from .params import (ConfigError, ParameterSet, Scenario, ScenarioKind,
                     apply_overlay, validate)
from .sim import NumericalDivergence, average_speed, run_scenario, speed_profile

WORST_SCORE = math.inf

# virtual paths evaluated with the closed-form stroke model
STROKE_PREFIX = "stroke."
STROKE_FIELDS = ("delta_volume", "contraction_duration", "expansion_duration")


class OptimizationMethod(enum.Enum):
    NELDER_MEAD = "nelder-mead"
    GRID = "grid"
    RANDOM = "random"


class ObjectiveKind(enum.Enum):
    MAX_AVG_SPEED = "max-avg-speed"
    MAX_NET_IMPULSE_PER_STROKE = "max-net-impulse-per-stroke"
    MIN_ENERGY_PER_DISTANCE = "min-energy-per-distance"


@dataclass(frozen=True)
class BoundedParameter:
    """One searchable parameter: a dotted config path with box bounds."""

    path: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.path or not isinstance(self.path, str):
            raise ConfigError("parameter path must be a non-empty string")
        if not (self.lower < self.upper):
            raise ConfigError(f"{self.path}: bounds must satisfy lower < "
                              f"upper, got [{self.lower}, {self.upper}]")

    def clip(self, value: float) -> float:
        return min(max(value, self.lower), self.upper)


@dataclass(frozen=True)
class DesignVector:
    parameters: tuple[BoundedParameter, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "values",
                           tuple(float(v) for v in self.values))
        if len(self.parameters) != len(self.values):
            raise ConfigError("one value per bounded parameter required")
        if len({p.path for p in self.parameters}) != len(self.parameters):
            raise ConfigError("duplicate parameter paths in design")
        for p, v in zip(self.parameters, self.values):
            if not (p.lower <= v <= p.upper):
                raise ConfigError(f"{p.path}={v} outside [{p.lower}, "
                                  f"{p.upper}]")

    def as_overlay(self) -> dict[str, float]:
        return {p.path: v for p, v in zip(self.parameters, self.values)}

    def with_values(self, values) -> "DesignVector":
        return DesignVector(self.parameters, tuple(float(v) for v in values))


@dataclass(frozen=True)
class Objective:
    """What to score and on which plant configuration."""

    kind: ObjectiveKind
    params: ParameterSet
    horizon_cycles: int = 3

    def __post_init__(self):
        if self.horizon_cycles < 2:
            raise ConfigError("objective horizon must cover >= 2 cycles")


@dataclass(frozen=True)
class Evaluation:
    index: int
    values: tuple[float, ...]
    score: float
    feasible: bool
    metrics: dict[str, float]


@dataclass(frozen=True)
class OptimizationResult:
    design: DesignVector
    score: float
    feasible: bool
    metrics: dict[str, float]
    log: tuple[Evaluation, ...]

    @property
    def evaluations(self) -> int:
        return len(self.log)


# ---------------------------------------------------------------------------
# metric extraction
# ---------------------------------------------------------------------------

def _is_stroke_design(parameters) -> bool:
    flags = [p.path.startswith(STROKE_PREFIX) for p in parameters]
    if any(flags) and not all(flags):
        raise ConfigError("stroke.* surrogate paths cannot be mixed with "
                          "plant parameter paths in one design")
    return bool(flags) and all(flags)


def default_stroke_profile(params: ParameterSet) -> hydro.StrokeProfile:
    """Closed-form stroke implied by the configured bell at full travel."""
    from .engine import bell_volume
    half = params.engine.half_travel
    dv = bell_volume(0.0, params.robot, half) \
        - bell_volume(half, params.robot, half)
    return hydro.StrokeProfile(delta_volume=dv, contraction_duration=0.2,
                               expansion_duration=0.3)


def stroke_surrogate_metrics(overlay: dict[str, float],
                             params: ParameterSet) -> dict[str, float]:
    """Eq.-of-motion-free metrics from the single-stroke jet model."""
    base = default_stroke_profile(params)
    fields = {name: getattr(base, name) for name in STROKE_FIELDS}
    for path, value in overlay.items():
        name = path[len(STROKE_PREFIX):]
        if name not in fields:
            raise ConfigError(f"unknown stroke surrogate path {path!r}")
        fields[name] = value
    profile = hydro.StrokeProfile(**fields)
    return {
        "mean_thrust_N": hydro.stroke_mean_thrust(profile, params.robot),
        "net_impulse_per_stroke_Ns":
            hydro.stroke_net_impulse(profile, params.robot),
    }


def powered_time(params: ParameterSet, duration: float) -> float:
    """Total seconds the supply is switched on within the run."""
    protocol = params.power
    total = 0.0
    for cycle in range(params.scenario.n_cycles):
        start = cycle * protocol.cycle_period
        if start >= duration:
            break
        total += min(protocol.on_duration, duration - start)
    return total


def simulation_metrics(params: ParameterSet,
                       horizon_cycles: int) -> dict[str, float]:
    """Free-swim metrics for one design; raises on config errors."""
    scenario = replace(params.scenario, kind=ScenarioKind.FREE_SWIM,
                       n_cycles=horizon_cycles, duration=None)
    candidate = replace(params, scenario=scenario)
    trajectory = run_scenario(candidate)
    duration = trajectory.duration()
    _, speeds = speed_profile(trajectory)
    thrust_impulse = float(np.trapezoid(trajectory.thrust, trajectory.time))
    snaps = trajectory.snap_count
    energy = candidate.power.supply_voltage * candidate.power.supply_current \
        * powered_time(candidate, duration)
    displacement = trajectory.net_displacement()
    metrics = {
        "avg_speed_mps": average_speed(trajectory),
        "peak_speed_mps": float(np.max(np.abs(speeds))),
        "net_displacement_m": displacement,
        "snap_count": float(snaps),
        "mean_thrust_N": float(np.mean(trajectory.thrust)),
        "thrust_impulse_Ns": thrust_impulse,
        "net_impulse_per_stroke_Ns":
            thrust_impulse / snaps if snaps else math.nan,
        "energy_J": energy,
        "energy_per_distance_Jpm":
            energy / displacement if displacement > 0.0 else math.nan,
    }
    return metrics


def _score_from_metrics(kind: ObjectiveKind,
                        metrics: dict[str, float]) -> tuple[float, bool]:
    if kind is ObjectiveKind.MAX_NET_IMPULSE_PER_STROKE:
        value = metrics.get("net_impulse_per_stroke_Ns", math.nan)
        return (-value, True) if math.isfinite(value) else (WORST_SCORE, False)
    if kind is ObjectiveKind.MAX_AVG_SPEED:
        if metrics.get("snap_count", 0.0) < 1.0:
            return WORST_SCORE, False
        return -metrics["avg_speed_mps"], True
    if kind is ObjectiveKind.MIN_ENERGY_PER_DISTANCE:
        value = metrics.get("energy_per_distance_Jpm", math.nan)
        if metrics.get("snap_count", 0.0) < 1.0 or not math.isfinite(value):
            return WORST_SCORE, False
        return value, True
    raise ConfigError(f"unhandled objective kind {kind}")


def _evaluate_values(values: tuple[float, ...],
                     parameters: tuple[BoundedParameter, ...],
                     objective: Objective) -> tuple[float, bool, dict]:
    """Score one point; module-level so parallel batches can pickle it."""
    overlay = {p.path: v for p, v in zip(parameters, values)}
    if _is_stroke_design(parameters):
        metrics = stroke_surrogate_metrics(overlay, objective.params)
        if objective.kind is not ObjectiveKind.MAX_NET_IMPULSE_PER_STROKE:
            raise ConfigError("the stroke surrogate only scores "
                              "MAX_NET_IMPULSE_PER_STROKE")
        return -metrics["net_impulse_per_stroke_Ns"], True, metrics

    candidate = apply_overlay(objective.params, overlay)
    try:
        metrics = simulation_metrics(candidate, objective.horizon_cycles)
    except NumericalDivergence:
        return WORST_SCORE, False, {}
    score, feasible = _score_from_metrics(objective.kind, metrics)
    return score, feasible, metrics


def evaluate(design: DesignVector, objective: Objective) -> Evaluation:
    """Deterministic score plus diagnostics for one design."""
    if not _is_stroke_design(design.parameters):
        candidate = apply_overlay(objective.params, design.as_overlay())
        problems = validate(candidate)
        if problems:
            raise ConfigError("; ".join(problems))
    score, feasible, metrics = _evaluate_values(design.values,
                                                design.parameters, objective)
    return Evaluation(index=0, values=design.values, score=score,
                      feasible=feasible, metrics=metrics)


# ---------------------------------------------------------------------------
# minimization core (shared with the calibration fitter)
# ---------------------------------------------------------------------------

class _BudgetExhausted(Exception):
    pass


class _Recorder:
    """Counts evaluations, keeps the log and tracks the feasible best."""

    def __init__(self, fn, budget, log_path=None, paths=()):
        self.fn = fn
        self.budget = budget
        self.log: list[Evaluation] = []
        self.best: Evaluation | None = None
        self._handle = None
        if log_path is not None:
            self._handle = Path(log_path).open("w")
            header = ["eval_index", *paths, "score", "feasible"]
            self._handle.write(",".join(header) + "\n")

    def __call__(self, x: np.ndarray) -> float:
        if len(self.log) >= self.budget:
            raise _BudgetExhausted
        score, feasible, metrics = self.fn(tuple(float(v) for v in x))
        record = Evaluation(index=len(self.log),
                            values=tuple(float(v) for v in x),
                            score=score, feasible=feasible, metrics=metrics)
        self.log.append(record)
        if self._handle is not None:
            row = [str(record.index),
                   *("%.9g" % v for v in record.values),
                   "%.9g" % score if math.isfinite(score) else "inf",
                   "1" if feasible else "0"]
            self._handle.write(",".join(row) + "\n")
            self._handle.flush()
        better = self.best is None or score < self.best.score \
            or (feasible and not self.best.feasible)
        if better and (feasible or self.best is None
                       or not self.best.feasible):
            self.best = record
        return score

    def record_batch(self, points, results):
        for x, (score, feasible, metrics) in zip(points, results):
            if len(self.log) >= self.budget:
                break
            record = Evaluation(index=len(self.log),
                                values=tuple(float(v) for v in x),
                                score=score, feasible=feasible,
                                metrics=metrics)
            self.log.append(record)
            if self._handle is not None:
                row = [str(record.index),
                       *("%.9g" % v for v in record.values),
                       "%.9g" % score if math.isfinite(score) else "inf",
                       "1" if feasible else "0"]
                self._handle.write(",".join(row) + "\n")
            better = self.best is None or record.score < self.best.score \
                or (feasible and not self.best.feasible)
            if better and (feasible or self.best is None
                           or not self.best.feasible):
                self.best = record
        if self._handle is not None:
            self._handle.flush()

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def _nelder_mead(recorder: _Recorder, lower: np.ndarray, upper: np.ndarray,
                 x0: np.ndarray) -> None:
    """Standard simplex search with projection onto the box.

    Coefficients: reflection 1, expansion 2, contraction 1/2, shrink
    1/2.  Restarts once around the incumbent if the simplex collapses.
    """
    span = upper - lower

    def project(x):
        return np.clip(x, lower, upper)

    def init_simplex(center, scale):
        simplex = [project(center)]
        for i in range(len(center)):
            step = scale * span[i]
            vertex = center.copy()
            vertex[i] = center[i] + step if center[i] + step <= upper[i] \
                else center[i] - step
            simplex.append(project(vertex))
        return [np.asarray(v, dtype=float) for v in simplex]

    restarts_left = 1
    simplex = init_simplex(np.asarray(x0, dtype=float), 0.10)
    scores = [recorder(v) for v in simplex]

    while True:
        order = np.argsort(scores, kind="stable")
        simplex = [simplex[i] for i in order]
        scores = [scores[i] for i in order]

        diameter = max(float(np.max(np.abs(v - simplex[0])))
                       for v in simplex[1:])
        if diameter < 1e-10 * float(np.max(span)):
            if restarts_left == 0:
                return
            restarts_left -= 1
            simplex = init_simplex(simplex[0], 0.05)
            scores = [scores[0]] + [recorder(v) for v in simplex[1:]]
            continue

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = project(centroid + (centroid - worst))
        f_reflected = recorder(reflected)
        if f_reflected < scores[0]:
            expanded = project(centroid + 2.0 * (centroid - worst))
            f_expanded = recorder(expanded)
            if f_expanded < f_reflected:
                simplex[-1], scores[-1] = expanded, f_expanded
            else:
                simplex[-1], scores[-1] = reflected, f_reflected
        elif f_reflected < scores[-2]:
            simplex[-1], scores[-1] = reflected, f_reflected
        else:
            if f_reflected < scores[-1]:
                contracted = project(centroid + 0.5 * (reflected - centroid))
            else:
                contracted = project(centroid + 0.5 * (worst - centroid))
            f_contracted = recorder(contracted)
            if f_contracted < min(scores[-1], f_reflected):
                simplex[-1], scores[-1] = contracted, f_contracted
            else:  # shrink toward the incumbent
                for i in range(1, len(simplex)):
                    simplex[i] = project(simplex[0]
                                         + 0.5 * (simplex[i] - simplex[0]))
                    scores[i] = recorder(simplex[i])


def _grid_points(lower, upper, budget):
    d = len(lower)
    n = max(int(math.floor(budget ** (1.0 / d) + 1e-9)), 1)
    axes = [np.linspace(lo, hi, n) if n > 1
            else np.array([0.5 * (lo + hi)])
            for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _run_batch(recorder: _Recorder, fn, points, jobs: int) -> None:
    points = [tuple(float(v) for v in p) for p in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, points, chunksize=4))
    else:
        results = [fn(p) for p in points]
    recorder.record_batch(points, results)


def minimize(fn, parameters: tuple[BoundedParameter, ...],
             x0, budget: int,
             method: OptimizationMethod = OptimizationMethod.NELDER_MEAD,
             seed: int = 0, jobs: int = 1,
             log_path=None) -> tuple[Evaluation | None, list[Evaluation]]:
    """Minimize fn(values_tuple) -> (score, feasible, metrics) in a box.

    Returns the best evaluation (feasible preferred) and the full log.
    Budget exhaustion is a normal return.
    """
    lower = np.array([p.lower for p in parameters], dtype=float)
    upper = np.array([p.upper for p in parameters], dtype=float)
    if budget < 1:
        raise ConfigError("evaluation budget must be >= 1")
    recorder = _Recorder(fn, budget, log_path=log_path,
                         paths=[p.path for p in parameters])
    try:
        if method is OptimizationMethod.NELDER_MEAD:
            if budget < len(parameters) + 1:
                raise ConfigError("NELDER_MEAD needs budget >= dimension + 1")
            x0 = np.asarray(x0, dtype=float)
            try:
                _nelder_mead(recorder, lower, upper, x0)
            except _BudgetExhausted:
                pass
        elif method is OptimizationMethod.GRID:
            _run_batch(recorder, fn, _grid_points(lower, upper, budget), jobs)
        elif method is OptimizationMethod.RANDOM:
            rng = np.random.default_rng(seed)
            points = rng.uniform(lower, upper, size=(budget, len(parameters)))
            _run_batch(recorder, fn, points, jobs)
        else:
            raise ConfigError(f"unhandled method {method}")
    finally:
        recorder.close()
    return recorder.best, recorder.log


def optimize(initial: DesignVector, objective: Objective, budget: int,
             method: OptimizationMethod = OptimizationMethod.NELDER_MEAD,
             seed: int = 0, jobs: int = 1,
             log_path=None) -> OptimizationResult:
    """Search the design box for the best objective score.

    The returned design is the best seen within the budget; if any
    evaluated design was feasible the result is feasible.
    """
    if not _is_stroke_design(initial.parameters):
        base = apply_overlay(objective.params, initial.as_overlay())
        problems = validate(base)
        if problems:
            raise ConfigError("initial design invalid: "
                              + "; ".join(problems))

    def fn(values):
        return _evaluate_values(values, initial.parameters, objective)

    # parallel batches need a picklable callable
    if jobs > 1:
        import functools
        fn = functools.partial(_evaluate_values,
                               parameters=initial.parameters,
                               objective=objective)

    best, log = minimize(fn, initial.parameters, initial.values, budget,
                         method=method, seed=seed, jobs=jobs,
                         log_path=log_path)
    assert best is not None
    return OptimizationResult(
        design=initial.with_values(best.values), score=best.score,
        feasible=best.feasible, metrics=best.metrics, log=tuple(log),
    )


def sweep_metrics(params: ParameterSet, path: str, values,
                  horizon_cycles: int = 3, jobs: int = 1) -> list[dict]:
    """Metrics per value of one swept parameter (plant or stroke.*)."""
    rows = []
    if path.startswith(STROKE_PREFIX):
        for value in values:
            metrics = stroke_surrogate_metrics({path: float(value)}, params)
            rows.append({"value": float(value), **metrics})
        return rows
    for value in values:
        candidate = apply_overlay(params, {path: float(value)})
        problems = validate(candidate)
        if problems:
            raise ConfigError(f"{path}={value}: " + "; ".join(problems))
        try:
            metrics = simulation_metrics(candidate, horizon_cycles)
        except NumericalDivergence:
            metrics = {"snap_count": 0.0}
        rows.append({"value": float(value), **metrics})
    return rows

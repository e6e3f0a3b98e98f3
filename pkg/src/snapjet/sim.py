"""Scenario runner: couples coils, engine and body into full traces.

Two scenario kinds share one integrator.  FREE_SWIM integrates the
1-DOF body momentum balance (jet thrust minus quadratic drag over the
added-mass-corrected total mass); FIXED_MOUNT pins the body and records
the thrust as the reaction force a mount would read.  One stroke per
power cycle: the controller alternates the heated pair every
cycle_period, so cycle k and k+1 drive opposite strokes.

Trajectories are deterministic: identical parameter sets and steps give
bitwise-identical state sequences (scalar arithmetic in a fixed order,
no RNG anywhere in the physics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernel
from .actuator import SmaState
from .engine import EngineState, coil_extensions
from .hydro import effective_mass
from .params import (
    ParameterSet,
    Pair,
    PowerProtocol,
    Scenario,
    ScenarioKind,
    validate,
)

TRACE_COLUMNS = (
    "time_s", "body_pos_m", "body_vel_mps", "hub_pos_m", "hub_vel_mps",
    "sma_top_temp_C", "sma_bot_temp_C", "xi_top", "xi_bot",
    "bell_vol_m3", "thrust_N", "drag_N",
)


class NumericalDivergence(RuntimeError):
    """A state variable left the finite range during integration."""

    def __init__(self, step_index: int, time: float):
        self.step_index = step_index
        self.time = time
        super().__init__(
            f"non-finite state at step {step_index} (t = {time:.6g} s); "
            "check time_step against the stiffness of the configuration"
        )


@dataclass(frozen=True)
class BodyState:
    position: float               # m, along the swim axis
    velocity: float               # m/s


@dataclass(frozen=True)
class SimFrame:
    """One recorded instant of the coupled system."""

    time: float
    body: BodyState
    engine: EngineState
    sma_top: SmaState
    sma_bottom: SmaState
    bell_volume: float
    thrust: float
    drag: float


@dataclass
class Trajectory(Sequence):
    """Columnar recording of a run; behaves as a sequence of SimFrame."""

    params: ParameterSet
    time: np.ndarray
    body_pos: np.ndarray
    body_vel: np.ndarray
    hub_pos: np.ndarray
    hub_vel: np.ndarray
    temp_top: np.ndarray
    temp_bot: np.ndarray
    xi_top: np.ndarray
    xi_bot: np.ndarray
    volume: np.ndarray
    thrust: np.ndarray
    drag: np.ndarray
    active_pair: np.ndarray = field(repr=False)
    snaps: np.ndarray = field(repr=False, default=None)
    snap_count: int = 0

    def __len__(self) -> int:
        return len(self.time)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        act = self.params.actuator
        eng = self.params.engine
        y = float(self.hub_pos[i])
        x_top, x_bot = coil_extensions(y, act, eng)
        # per-frame branch flags are not recorded; reconstruct from the
        # temperature trend so SmaState stays self-consistent
        det = i if i >= 0 else len(self) + i
        prev = max(det - 1, 0)
        return SimFrame(
            time=float(self.time[i]),
            body=BodyState(float(self.body_pos[i]), float(self.body_vel[i])),
            engine=EngineState(
                hub_position=y,
                hub_velocity=float(self.hub_vel[i]),
                active_pair=Pair.TOP if self.active_pair[i] == 0 else Pair.BOTTOM,
                snap_count=int(self.snaps[i]),
            ),
            sma_top=SmaState(
                temperature=float(self.temp_top[i]),
                austenite_fraction=float(self.xi_top[i]),
                displacement=x_top,
                heating_branch=bool(self.temp_top[det] > self.temp_top[prev]),
            ),
            sma_bottom=SmaState(
                temperature=float(self.temp_bot[i]),
                austenite_fraction=float(self.xi_bot[i]),
                displacement=x_bot,
                heating_branch=bool(self.temp_bot[det] > self.temp_bot[prev]),
            ),
            bell_volume=float(self.volume[i]),
            thrust=float(self.thrust[i]),
            drag=float(self.drag[i]),
        )

    def __iter__(self) -> Iterator[SimFrame]:
        return (self[i] for i in range(len(self)))

    def net_displacement(self) -> float:
        return float(self.body_pos[-1] - self.body_pos[0])

    def duration(self) -> float:
        return float(self.time[-1] - self.time[0])


def stroke_controller(time: float, engine: EngineState,
                      protocol: PowerProtocol,
                      first_active_pair: Pair = Pair.TOP,
                      n_cycles: int | None = None) -> tuple[float, float]:
    """Per-coil electrical power (top, bottom) at a given time.

    Cycle k selects one pair (alternating from first_active_pair) and
    powers each of its coils with V*I*pair_split_fraction for
    on_duration, then rests for the remainder of the cycle.  The two
    pairs are never powered together.  With cutoff_on_snap set, power
    also drops once the cycle's snap has been counted.
    """
    if time < 0.0:
        return 0.0, 0.0
    cycle = int(math.floor(time / protocol.cycle_period))
    if n_cycles is not None and cycle >= n_cycles:
        return 0.0, 0.0
    within_on = time - cycle * protocol.cycle_period < protocol.on_duration
    if not within_on:
        return 0.0, 0.0
    if protocol.cutoff_on_snap and engine.snap_count > cycle:
        return 0.0, 0.0
    first = 0 if first_active_pair is Pair.TOP else 1
    power = protocol.coil_power()
    if (cycle + first) % 2 == 0:
        return power, 0.0
    return 0.0, power


def run_scenario(params: ParameterSet,
                 initial_hub_position: float | None = None) -> Trajectory:
    """Integrate a configured scenario and return its trajectory.

    The hub starts at rest at the stop opposite the first active pair
    (so the first stroke pulls it across) unless an explicit starting
    position is given.  Raises InvariantViolation for invalid parameter
    sets and NumericalDivergence if the state leaves the finite range.
    """
    violations = validate(params)
    if violations:
        from .params import InvariantViolation
        raise InvariantViolation(violations)

    act, rob, eng = params.actuator, params.robot, params.engine
    pow_, scn = params.power, params.scenario

    dt = scn.time_step
    steps_per_cycle = int(round(pow_.cycle_period / dt))
    duration = (scn.duration if scn.duration is not None
                else scn.n_cycles * pow_.cycle_period)
    n_steps = int(round(duration / dt))
    decim = int(round(scn.output_interval / dt))

    a = eng.half_travel
    first = 0 if scn.first_active_pair is Pair.TOP else 1
    if initial_hub_position is None:
        y0 = -a if first == 0 else a
    else:
        y0 = initial_hub_position
        if abs(y0) > a:
            raise ValueError("initial hub position must lie within the stops")

    n_frames = n_steps // decim + 1
    cols = {name: np.empty(n_frames) for name in (
        "time", "body_pos", "body_vel", "hub_pos", "hub_vel",
        "temp_top", "temp_bot", "xi_top", "xi_bot",
        "volume", "thrust", "drag")}
    pair_col = np.empty(n_frames, dtype=np.int64)
    snaps_col = np.empty(n_frames, dtype=np.int64)

    snap_count, diverged = _kernel.integrate(
        n_steps, decim, dt,
        scn.kind is ScenarioKind.FIXED_MOUNT,
        first,
        steps_per_cycle, scn.n_cycles,
        pow_.on_duration, pow_.coil_power(), pow_.cutoff_on_snap,
        rob.water_temperature, act.thermal_capacitance,
        act.convective_coefficient_area,
        act.austenite_start, act.austenite_finish,
        act.martensite_start, act.martensite_finish,
        act.shear_modulus_martensite,
        act.shear_modulus_austenite - act.shear_modulus_martensite,
        act.wire_diameter**4,
        8.0 * act.coil_diameter**3 * act.active_turns,
        act.pre_stretch, a,
        eng.hub_moving_mass, eng.hub_damping,
        _barrier_u0(eng), eng.well_tilt_force, eng.stop_restitution,
        rob.bell_volume_rest, 0.5 * rob.body_diameter, rob.linkage_ratio,
        rob.water_density / rob.jet_orifice_area, rob.intake_thrust_factor,
        effective_mass(rob),
        0.5 * rob.water_density * rob.drag_coefficient * rob.frontal_area,
        y0, 0.0,
        rob.water_temperature, rob.water_temperature, 0.0, 0.0,
        cols["time"], cols["body_pos"], cols["body_vel"],
        cols["hub_pos"], cols["hub_vel"],
        cols["temp_top"], cols["temp_bot"], cols["xi_top"], cols["xi_bot"],
        cols["volume"], cols["thrust"], cols["drag"], pair_col, snaps_col,
    )
    if diverged >= 0:
        raise NumericalDivergence(diverged, diverged * dt)

    return Trajectory(
        params=params, snap_count=int(snap_count), active_pair=pair_col,
        snaps=snaps_col, **cols,
    )


def _barrier_u0(eng) -> float:
    from .engine import barrier_scale
    return barrier_scale(eng)


def speed_profile(trajectory: Trajectory, window: int = 5
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Body speed over time from recorded positions.

    Central differences on the output grid, then a centred moving
    average of the given (odd) window; window 1 means no smoothing.
    Returns (times, speeds) for the interior samples.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    t = trajectory.time
    x = trajectory.body_pos
    if len(t) < 3:
        return t[1:-1], np.empty(0)
    raw = np.abs((x[2:] - x[:-2]) / (t[2:] - t[:-2]))
    if window == 1:
        return t[1:-1], raw
    half = window // 2
    csum = np.cumsum(np.concatenate(([0.0], raw)))
    n = len(raw)
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half, n - 1)
    smoothed = (csum[hi + 1] - csum[lo]) / (hi + 1 - lo)
    return t[1:-1], smoothed


def average_speed(trajectory: Trajectory) -> float:
    """Net displacement over elapsed time (signed; forward positive)."""
    dur = trajectory.duration()
    if dur <= 0.0:
        return 0.0
    return trajectory.net_displacement() / dur


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def write_trace_csv(trajectory: Trajectory, path: str | Path) -> None:
    """Fixed-order trace columns, 9 significant digits per value."""
    arrays = (
        trajectory.time, trajectory.body_pos, trajectory.body_vel,
        trajectory.hub_pos, trajectory.hub_vel,
        trajectory.temp_top, trajectory.temp_bot,
        trajectory.xi_top, trajectory.xi_bot,
        trajectory.volume, trajectory.thrust, trajectory.drag,
    )
    lines = [",".join(TRACE_COLUMNS)]
    for row in zip(*arrays):
        lines.append(",".join("%.9g" % v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_json(trajectory: Trajectory, path: str | Path) -> None:
    import json
    doc = {
        "columns": list(TRACE_COLUMNS),
        "snap_count": trajectory.snap_count,
        "data": {
            name: [float("%.9g" % v) for v in arr]
            for name, arr in zip(TRACE_COLUMNS, (
                trajectory.time, trajectory.body_pos, trajectory.body_vel,
                trajectory.hub_pos, trajectory.hub_vel,
                trajectory.temp_top, trajectory.temp_bot,
                trajectory.xi_top, trajectory.xi_bot,
                trajectory.volume, trajectory.thrust, trajectory.drag,
            ))
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")

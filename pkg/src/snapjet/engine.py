"""Bistable snap-through engine: double well, hub dynamics, bell kinematics.

The bell's elastic skeleton is modelled as a quartic double well over
the hub coordinate y in [-a, +a] (a = half the stop-to-stop travel):

    U(y) = U0 ((y/a)^2 - 1)^2

so both stops are stable minima with U(+-a) = 0 and the barrier U(0) =
U0.  U0 is normalised from the peak restoring force F_pk = max |dU/dy|
(reached at y = a/sqrt(3)): U0 = 3 sqrt(3) F_pk a / 8.  An optional
linear tilt skews the two barriers for up/down asymmetry.

The hub carries the lumped moving mass, a heavy velocity-proportional
damping (mostly the hydraulic load of forcing water through the
orifice) and hard stops with a restitution factor.  Integration is
semi-implicit Euler (velocity first, then position with the new
velocity); the damping term is folded into the velocity update
implicitly, which keeps the scheme stable under the heavy default
damping at the default step.

Coil displacements are kinematically tied to the hub: the top pair
unloads as y rises, the bottom pair mirrors it.  Bell volume follows
the hub through the linkage, peaking mid-travel where the bell is
widest and returning to the rest volume at either stop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .actuator import SmaState, spring_force
from .params import ActuatorParams, EngineParams, Pair, RobotParams

# U0 = BARRIER_SHAPE * F_pk * a for the quartic well
BARRIER_SHAPE = 3.0 * math.sqrt(3.0) / 8.0


@dataclass(frozen=True)
class EngineState:
    """Hub coordinate, its rate, the driving pair and snap tally."""

    hub_position: float           # m, y in [-a, +a]
    hub_velocity: float           # m/s
    active_pair: Pair = Pair.TOP  # pair selected by the current cycle
    snap_count: int = 0           # zero crossings of y so far


@dataclass(frozen=True)
class StepEnergy:
    """Energy bookkeeping of one hub step (all joules)."""

    work_sma: float               # work done on the hub by the coil pairs
    dissipated_damping: float     # heat lost to the damper
    stop_loss: float              # kinetic energy destroyed at a stop hit


def barrier_scale(params: EngineParams) -> float:
    """U0 in joules for the configured peak restoring force and travel."""
    return BARRIER_SHAPE * params.barrier_peak_force * params.half_travel


def well_potential(y: float, params: EngineParams) -> float:
    """Double-well energy at hub position y, tilt included."""
    a = params.half_travel
    s = (y / a) ** 2 - 1.0
    return barrier_scale(params) * s * s + params.well_tilt_force * y


def well_force(y: float, params: EngineParams) -> float:
    """Restoring force -dU/dy at hub position y."""
    a = params.half_travel
    grad = 4.0 * barrier_scale(params) * y * ((y / a) ** 2 - 1.0) / (a * a)
    return -grad - params.well_tilt_force


def coil_extensions(y: float, actuator: ActuatorParams,
                    engine: EngineParams) -> tuple[float, float]:
    """(top, bottom) coil extensions at hub position y.

    The top pair is anchored above the hub, so its extension shrinks as
    y rises; the bottom pair mirrors it.  With |y| <= a the extensions
    stay inside [pre_stretch, pre_stretch + hub_travel], which the
    validation rule hub_travel <= max_stroke keeps within the actuator's
    displacement bounds.
    """
    a = engine.half_travel
    top = actuator.pre_stretch + (a - y)
    bottom = actuator.pre_stretch + (a + y)
    return top, bottom


def net_hub_force(state: EngineState, sma_top: SmaState, sma_bottom: SmaState,
                  engine: EngineParams, actuator: ActuatorParams) -> float:
    """Net force on the hub: coil pairs, well gradient and damping.

    Each pair contributes twice one coil's pull; the top pair pulls
    toward +a, the bottom toward -a.
    """
    f_top = 2.0 * spring_force(sma_top, actuator)
    f_bottom = 2.0 * spring_force(sma_bottom, actuator)
    return (f_top - f_bottom + well_force(state.hub_position, engine)
            - engine.hub_damping * state.hub_velocity)


def step_hub_energy(state: EngineState, sma_top: SmaState, sma_bottom: SmaState,
                    engine: EngineParams, actuator: ActuatorParams,
                    dt: float) -> tuple[EngineState, StepEnergy]:
    """One semi-implicit Euler step of (y, dy/dt) with energy bookkeeping.

    Velocity is updated first (damping handled implicitly for stability),
    position second with the new velocity.  Crossing a stop clamps the
    position and reflects the velocity scaled by -stop_restitution;
    crossing y = 0 increments snap_count.
    """
    a = engine.half_travel
    m = engine.hub_moving_mass
    y = state.hub_position
    v = state.hub_velocity

    f_top = 2.0 * spring_force(sma_top, actuator)
    f_bottom = 2.0 * spring_force(sma_bottom, actuator)
    f_sma = f_top - f_bottom
    f_nondamp = f_sma + well_force(y, engine)

    v_new = (v + dt * f_nondamp / m) / (1.0 + dt * engine.hub_damping / m)
    y_new = y + dt * v_new

    stop_loss = 0.0
    if y_new > a:
        y_new = a
        stop_loss = 0.5 * m * v_new * v_new * (1.0 - engine.stop_restitution**2)
        v_new = -engine.stop_restitution * v_new
    elif y_new < -a:
        y_new = -a
        stop_loss = 0.5 * m * v_new * v_new * (1.0 - engine.stop_restitution**2)
        v_new = -engine.stop_restitution * v_new

    snaps = state.snap_count
    if y * y_new < 0.0:
        snaps += 1

    dy = y_new - y
    energy = StepEnergy(
        work_sma=f_sma * dy,
        dissipated_damping=engine.hub_damping * v_new * dy,
        stop_loss=stop_loss,
    )
    new_state = replace(state, hub_position=y_new, hub_velocity=v_new,
                        snap_count=snaps)
    return new_state, energy


def step_hub(state: EngineState, sma_top: SmaState, sma_bottom: SmaState,
             engine: EngineParams, actuator: ActuatorParams,
             dt: float) -> EngineState:
    """step_hub_energy without the bookkeeping."""
    return step_hub_energy(state, sma_top, sma_bottom, engine, actuator, dt)[0]


def bell_volume(y: float, robot: RobotParams, hub_half_travel: float) -> float:
    """Enclosed bell volume at hub position y.

    The linkage converts hub travel into radial bell travel with ratio
    linkage_ratio; the volume scales with the squared radius, so

        V(y) = V_rest (r(y)/r_rest)^2,   r(y) = r_rest + lam (a - |y|)

    which peaks at mid-travel (widest bell) and returns exactly to the
    rest volume at either stop.  Smooth except for the |y| kink at 0.
    """
    r_rest = 0.5 * robot.body_diameter
    r = r_rest + robot.linkage_ratio * (hub_half_travel - abs(y))
    ratio = r / r_rest
    return robot.bell_volume_rest * ratio * ratio

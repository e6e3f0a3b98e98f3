"""Bistable SMA pulse-jet swimmer: simulation, analysis, optimization."""

from .params import (
    ActuatorParams,
    ConfigError,
    EngineParams,
    InvariantViolation,
    Pair,
    ParameterSet,
    PowerProtocol,
    RobotParams,
    Scenario,
    ScenarioKind,
    StrokeDirection,
    load_config,
    validate,
)
from .actuator import SmaState, phase_fraction, spring_force, step_temperature
from .engine import EngineState, bell_volume, net_hub_force, step_hub, well_potential
from .hydro import StrokeProfile, drag_force, jet_thrust_instantaneous, stroke_mean_thrust
from .sim import (
    BodyState,
    NumericalDivergence,
    SimFrame,
    Trajectory,
    run_scenario,
    speed_profile,
    stroke_controller,
)

__version__ = "0.1.0"

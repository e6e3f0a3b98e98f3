"""Physical parameters and configuration ingestion for the pulse-jet swimmer.

Every quantity used by the model lives in one of the frozen dataclasses
below.  Internal units are SI throughout (metres, kilograms, seconds,
newtons, pascals, watts), with one deliberate exception: temperatures are
kept in degrees Celsius because every transformation threshold of the
alloy is specified that way.

Configuration documents are TOML (canonical) or JSON with the same
nesting.  Keys are grouped into [actuator], [robot], [engine], [power]
and [scenario] tables.  Physical values may carry unit suffixes as
strings ("0.381 mm", "186 g", "68 C"); bare numbers are taken as SI (or
Celsius for temperatures).  Any field absent from a document takes the
default declared here; the shipped data/default.toml spells out all of
them explicitly.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

try:  # stdlib from 3.11 on
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised when a configuration document cannot be parsed.

    The message carries the offending file, table and key so the user
    can locate the problem without a stack trace.
    """


class InvariantViolation(ValueError):
    """Raised by load_config when a parsed parameter set fails validate()."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(violations))


class ScenarioKind(enum.Enum):
    FREE_SWIM = "free_swim"
    FIXED_MOUNT = "fixed_mount"


class Pair(enum.Enum):
    """Which antagonistic coil pair is addressed (top = lid side)."""

    TOP = "top"
    BOTTOM = "bottom"


class StrokeDirection(enum.Enum):
    UPSTROKE = "upstroke"
    DOWNSTROKE = "downstroke"


# ---------------------------------------------------------------------------
# parameter dataclasses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActuatorParams:
    """One SMA coil spring of the antagonistic drive.

    Geometry follows the vendor sheet of the wound coil; transformation
    temperatures and shear moduli are standard figures for the alloy.
    The electrical/thermal lumped constants and the assembly pre-stretch
    are calibration extras: the classic coil-spring rate formula badly
    under-predicts the measured bell deformation force with this
    geometry, and pre_stretch is the sanctioned lever for closing that
    gap without touching the wound geometry.
    """

    wire_diameter: float = 0.381e-3        # m
    coil_diameter: float = 3.0e-3          # m, mean coil diameter
    coil_length: float = 40.0e-3           # m
    max_stroke: float = 2.1e-3             # m, usable displacement swing
    pitch: float = 0.5e-3                  # m
    active_turns: int = 18
    austenite_start: float = 68.0          # degC
    austenite_finish: float = 78.0         # degC
    martensite_start: float = 52.0         # degC
    martensite_finish: float = 42.0        # degC
    shear_modulus_martensite: float = 7.5e9   # Pa
    shear_modulus_austenite: float = 25.0e9   # Pa
    electrical_resistance: float = 3.7     # ohm, one coil
    thermal_capacitance: float = 0.8       # J/K, lumped coil + sheath
    convective_coefficient_area: float = 0.5  # W/K, hA product to water
    pre_stretch: float = 36.0e-3           # m, assembly extension at mid-travel

    def spring_rate(self, austenite_fraction: float) -> float:
        """Coil rate G(xi) d^4 / (8 D^3 n) in N/m."""
        g = self.shear_modulus_martensite + austenite_fraction * (
            self.shear_modulus_austenite - self.shear_modulus_martensite
        )
        return g * self.wire_diameter**4 / (
            8.0 * self.coil_diameter**3 * self.active_turns
        )


@dataclass(frozen=True)
class RobotParams:
    """Whole-body constants: hull, bell, jet orifice and water properties.

    The drag model (quadratic, fixed coefficient and frontal area) and the
    constant added-mass coefficient are deliberate simplifications; the
    default drag coefficient is calibrated against observed free-swim
    glide decay and therefore folds tether and trim losses into the body
    coefficient.
    """

    total_mass: float = 0.186              # kg
    bell_mass: float = 0.0646              # kg
    body_length: float = 0.2286            # m
    body_diameter: float = 0.110           # m
    bell_volume_rest: float = 1.1139e-3    # m^3, bell volume with hub at a stop
    bell_stiffness_peak_force: float = 6.0  # N, force to deform the bell
    linkage_ratio: float = 0.6             # radial bell travel per hub travel
    jet_orifice_area: float = 1.0e-3       # m^2, effective velum opening
    intake_thrust_factor: float = 0.1      # refill penalty, 0..1
    drag_coefficient: float = 5.0          # calibrated, includes tether/trim
    added_mass_coefficient: float = 0.5    # entrained-water fraction of mass
    frontal_area: float = 9.50332e-3       # m^2, pi/4 * body_diameter^2
    water_density: float = 1000.0          # kg/m^3
    water_temperature: float = 20.0        # degC


@dataclass(frozen=True)
class EngineParams:
    """Snap-through engine: double well, hub inertia and travel stops.

    The well's barrier_peak_force mirrors the bell deformation force.
    hub_damping lumps every velocity-proportional load on the hub, most
    of it the hydraulic resistance of driving water through the orifice,
    and sets the ejection time scale.  well_tilt_force skews the two
    barriers to model up/down stroke asymmetry (zero keeps the engine
    mirror-symmetric).
    """

    hub_travel: float = 2.1e-3             # m, stop-to-stop distance
    hub_moving_mass: float = 0.08          # kg, hub + linkage + bell share
    hub_damping: float = 610.0             # N s/m, lumped hydraulic load
    barrier_peak_force: float = 6.0        # N, max restoring force of the well
    stop_restitution: float = 0.3          # velocity ratio kept at a stop hit
    well_tilt_force: float = 0.0           # N, barrier asymmetry (+ favours -a)

    @property
    def half_travel(self) -> float:
        return 0.5 * self.hub_travel


@dataclass(frozen=True)
class PowerProtocol:
    """Duty-cycled supply alternating between the two coil pairs."""

    supply_voltage: float = 15.0           # V
    supply_current: float = 8.0            # A
    cycle_period: float = 5.0              # s, one stroke per cycle
    on_duration: float = 2.0               # s, heating window inside a cycle
    pair_split_fraction: float = 0.5       # electrical power share per coil
    cutoff_on_snap: bool = False           # stop heating once the stroke snapped

    def coil_power(self) -> float:
        """Electrical power delivered to each coil of the active pair, W."""
        return self.supply_voltage * self.supply_current * self.pair_split_fraction


@dataclass(frozen=True)
class Scenario:
    """Run settings: mode, horizon and output cadence."""

    kind: ScenarioKind = ScenarioKind.FREE_SWIM
    n_cycles: int = 7
    duration: float | None = None          # s, default n_cycles * cycle_period
    time_step: float = 1.0e-4              # s
    output_interval: float = 2.0e-3        # s, trace cadence (500 Hz)
    first_active_pair: Pair = Pair.TOP
    rng_seed: int = 0


@dataclass(frozen=True)
class ParameterSet:
    """Complete model configuration."""

    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    robot: RobotParams = field(default_factory=RobotParams)
    engine: EngineParams = field(default_factory=EngineParams)
    power: PowerProtocol = field(default_factory=PowerProtocol)
    scenario: Scenario = field(default_factory=Scenario)


DEFAULTS = ParameterSet()


# ---------------------------------------------------------------------------
# unit-suffixed quantity parsing
# ---------------------------------------------------------------------------

class Quantity(enum.Enum):
    LENGTH = "length"
    MASS = "mass"
    TIME = "time"
    AREA = "area"
    VOLUME = "volume"
    FORCE = "force"
    PRESSURE = "pressure"
    TEMPERATURE = "temperature"
    VOLTAGE = "voltage"
    CURRENT = "current"
    RESISTANCE = "resistance"
    HEAT_CAPACITY = "heat capacity"
    CONDUCTANCE = "thermal conductance"
    DAMPING = "damping"
    DENSITY = "density"
    DIMENSIONLESS = "dimensionless"
    COUNT = "count"
    FLAG = "flag"


# Factor to SI per accepted suffix.  Temperatures accept only Celsius
# spellings (factor 1): the model never converts temperature scales.
_UNIT_TABLES: dict[Quantity, dict[str, float]] = {
    Quantity.LENGTH: {"m": 1.0, "mm": 1e-3, "cm": 1e-2, "um": 1e-6},
    Quantity.MASS: {"kg": 1.0, "g": 1e-3},
    Quantity.TIME: {"s": 1.0, "ms": 1e-3, "min": 60.0},
    Quantity.AREA: {"m^2": 1.0, "m2": 1.0, "cm^2": 1e-4, "cm2": 1e-4,
                    "mm^2": 1e-6, "mm2": 1e-6},
    Quantity.VOLUME: {"m^3": 1.0, "m3": 1.0, "cm^3": 1e-6, "cm3": 1e-6,
                      "cc": 1e-6, "mL": 1e-6, "ml": 1e-6, "L": 1e-3},
    Quantity.FORCE: {"N": 1.0, "mN": 1e-3},
    Quantity.PRESSURE: {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    Quantity.TEMPERATURE: {"C": 1.0, "degC": 1.0, "°C": 1.0},
    Quantity.VOLTAGE: {"V": 1.0},
    Quantity.CURRENT: {"A": 1.0},
    Quantity.RESISTANCE: {"ohm": 1.0, "Ohm": 1.0, "Ω": 1.0},
    Quantity.HEAT_CAPACITY: {"J/K": 1.0},
    Quantity.CONDUCTANCE: {"W/K": 1.0},
    Quantity.DAMPING: {"N.s/m": 1.0, "N*s/m": 1.0, "N·s/m": 1.0, "Ns/m": 1.0},
    Quantity.DENSITY: {"kg/m^3": 1.0, "kg/m3": 1.0, "g/cm^3": 1e3, "g/cm3": 1e3},
    Quantity.DIMENSIONLESS: {},
    Quantity.COUNT: {},
    Quantity.FLAG: {},
}

_QUANTITY_PATTERN = re.compile(r"^\s*([-+0-9.eE]+)\s*(\S*)\s*$")


def parse_quantity(raw: Any, kind: Quantity, where: str = "value") -> float:
    """Convert a config value (number or 'number unit' string) to SI.

    `where` names the table.key for error messages.  Unit suffixes are
    checked against the dimension expected for the field, so a length
    given in grams fails loudly instead of being silently misread.
    """
    if isinstance(raw, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(raw, (int, float)):
        return float(raw)
    if not isinstance(raw, str):
        raise ConfigError(f"{where}: expected a number or 'value unit' string")
    m = _QUANTITY_PATTERN.match(raw)
    if m is None:
        raise ConfigError(f"{where}: cannot parse quantity {raw!r}")
    try:
        value = float(m.group(1))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad numeric literal in {raw!r}") from exc
    unit = m.group(2)
    if not unit:
        return value
    table = _UNIT_TABLES[kind]
    if unit not in table:
        raise ConfigError(
            f"{where}: unit {unit!r} is not a {kind.value} unit "
            f"(accepted: {', '.join(sorted(table)) or 'none'})"
        )
    return value * table[unit]


# ---------------------------------------------------------------------------
# schema: section -> field -> expected quantity
# ---------------------------------------------------------------------------

_SCHEMA: dict[str, dict[str, Quantity]] = {
    "actuator": {
        "wire_diameter": Quantity.LENGTH,
        "coil_diameter": Quantity.LENGTH,
        "coil_length": Quantity.LENGTH,
        "max_stroke": Quantity.LENGTH,
        "pitch": Quantity.LENGTH,
        "active_turns": Quantity.COUNT,
        "austenite_start": Quantity.TEMPERATURE,
        "austenite_finish": Quantity.TEMPERATURE,
        "martensite_start": Quantity.TEMPERATURE,
        "martensite_finish": Quantity.TEMPERATURE,
        "shear_modulus_martensite": Quantity.PRESSURE,
        "shear_modulus_austenite": Quantity.PRESSURE,
        "electrical_resistance": Quantity.RESISTANCE,
        "thermal_capacitance": Quantity.HEAT_CAPACITY,
        "convective_coefficient_area": Quantity.CONDUCTANCE,
        "pre_stretch": Quantity.LENGTH,
    },
    "robot": {
        "total_mass": Quantity.MASS,
        "bell_mass": Quantity.MASS,
        "body_length": Quantity.LENGTH,
        "body_diameter": Quantity.LENGTH,
        "bell_volume_rest": Quantity.VOLUME,
        "bell_stiffness_peak_force": Quantity.FORCE,
        "linkage_ratio": Quantity.DIMENSIONLESS,
        "jet_orifice_area": Quantity.AREA,
        "intake_thrust_factor": Quantity.DIMENSIONLESS,
        "drag_coefficient": Quantity.DIMENSIONLESS,
        "added_mass_coefficient": Quantity.DIMENSIONLESS,
        "frontal_area": Quantity.AREA,
        "water_density": Quantity.DENSITY,
        "water_temperature": Quantity.TEMPERATURE,
    },
    "engine": {
        "hub_travel": Quantity.LENGTH,
        "hub_moving_mass": Quantity.MASS,
        "hub_damping": Quantity.DAMPING,
        "barrier_peak_force": Quantity.FORCE,
        "stop_restitution": Quantity.DIMENSIONLESS,
        "well_tilt_force": Quantity.FORCE,
    },
    "power": {
        "supply_voltage": Quantity.VOLTAGE,
        "supply_current": Quantity.CURRENT,
        "cycle_period": Quantity.TIME,
        "on_duration": Quantity.TIME,
        "pair_split_fraction": Quantity.DIMENSIONLESS,
        "cutoff_on_snap": Quantity.FLAG,
    },
    "scenario": {
        "kind": Quantity.FLAG,
        "n_cycles": Quantity.COUNT,
        "duration": Quantity.TIME,
        "time_step": Quantity.TIME,
        "output_interval": Quantity.TIME,
        "first_active_pair": Quantity.FLAG,
        "rng_seed": Quantity.COUNT,
    },
}

_SECTION_TYPES = {
    "actuator": ActuatorParams,
    "robot": RobotParams,
    "engine": EngineParams,
    "power": PowerProtocol,
    "scenario": Scenario,
}


def _coerce_field(section: str, key: str, raw: Any) -> Any:
    where = f"{section}.{key}"
    if section == "scenario" and key == "kind":
        try:
            return ScenarioKind(str(raw).replace("-", "_"))
        except ValueError:
            raise ConfigError(
                f"{where}: unknown scenario kind {raw!r} "
                f"(accepted: free_swim, fixed_mount)"
            ) from None
    if section == "scenario" and key == "first_active_pair":
        try:
            return Pair(str(raw))
        except ValueError:
            raise ConfigError(f"{where}: expected 'top' or 'bottom'") from None
    if key == "cutoff_on_snap":
        if not isinstance(raw, bool):
            raise ConfigError(f"{where}: expected a boolean")
        return raw
    if section == "scenario" and key == "duration" and raw is None:
        return None
    try:
        kind = _SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"{where}: unknown parameter") from None
    value = parse_quantity(raw, kind, where)
    if kind is Quantity.COUNT:
        if value != int(value):
            raise ConfigError(f"{where}: expected an integer count")
        return int(value)
    return value


def _build_params(doc: dict[str, Any], source: str) -> ParameterSet:
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a table of sections")
    sections: dict[str, Any] = {}
    for name, payload in doc.items():
        if name not in _SCHEMA:
            raise ConfigError(
                f"{source}: unknown section [{name}] "
                f"(accepted: {', '.join(_SCHEMA)})"
            )
        if not isinstance(payload, dict):
            raise ConfigError(f"{source}: [{name}] must be a table")
        overrides = {}
        for key, raw in payload.items():
            if key not in _SCHEMA[name]:
                raise ConfigError(f"{source}: unknown key {name}.{key}")
            overrides[key] = _coerce_field(name, key, raw)
        sections[name] = dataclasses.replace(
            getattr(DEFAULTS, name), **overrides
        )
    return dataclasses.replace(ParameterSet(), **sections)


def loads_config(text: str, fmt: str = "toml", source: str = "<string>") -> ParameterSet:
    """Parse a config document from a string; fmt is 'toml' or 'json'."""
    if fmt == "toml":
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{source}: TOML parse error: {exc}") from exc
    elif fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{source}: JSON parse error at line {exc.lineno}: {exc.msg}"
            ) from exc
    else:
        raise ValueError(f"unknown config format {fmt!r}")
    params = _build_params(doc, source)
    violations = validate(params)
    if violations:
        raise InvariantViolation(violations)
    return params


def load_config(path: str | Path | None = None) -> ParameterSet:
    """Load a TOML/JSON config file; None returns the shipped defaults.

    Fields absent from the document keep their defaults.  Raises
    ConfigError for syntax/unit/unknown-key problems and
    InvariantViolation when the merged parameter set breaks a physical
    invariant.
    """
    if path is None:
        return DEFAULTS
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc}") from exc
    fmt = "json" if p.suffix.lower() == ".json" else "toml"
    return loads_config(text, fmt=fmt, source=str(p))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(params: ParameterSet) -> list[str]:
    """Return one human-readable line per violated invariant (empty = ok)."""
    a, r, e, p, s = (params.actuator, params.robot, params.engine,
                     params.power, params.scenario)
    out: list[str] = []

    def positive(section: str, name: str, value: float) -> None:
        if not value > 0.0:
            out.append(f"{section}.{name} must be > 0 (got {value!r})")

    for name in ("wire_diameter", "coil_diameter", "coil_length", "max_stroke",
                 "pitch", "pre_stretch", "shear_modulus_martensite",
                 "shear_modulus_austenite", "electrical_resistance",
                 "thermal_capacitance", "convective_coefficient_area"):
        positive("actuator", name, getattr(a, name))
    if a.active_turns < 1:
        out.append(f"actuator.active_turns must be >= 1 (got {a.active_turns})")
    if not a.wire_diameter < a.coil_diameter:
        out.append("actuator.wire_diameter must be smaller than coil_diameter")
    if not a.austenite_start < a.austenite_finish:
        out.append("actuator.austenite_start must be below austenite_finish")
    if not a.martensite_finish < a.martensite_start:
        out.append("actuator.martensite_finish must be below martensite_start")
    if not a.martensite_finish < a.austenite_finish:
        out.append("actuator.martensite_finish must be below austenite_finish")
    if not a.shear_modulus_austenite > a.shear_modulus_martensite:
        out.append("actuator.shear_modulus_austenite must exceed "
                   "shear_modulus_martensite")

    for name in ("total_mass", "bell_mass", "body_length", "body_diameter",
                 "bell_volume_rest", "bell_stiffness_peak_force",
                 "jet_orifice_area", "frontal_area", "water_density",
                 "drag_coefficient"):
        positive("robot", name, getattr(r, name))
    if not r.bell_mass < r.total_mass:
        out.append("robot.bell_mass must be below total_mass")
    if not 0.0 <= r.intake_thrust_factor <= 1.0:
        out.append("robot.intake_thrust_factor must lie in [0, 1] "
                    f"(got {r.intake_thrust_factor!r})")
    if r.added_mass_coefficient < 0.0:
        out.append("robot.added_mass_coefficient must be >= 0")
    if r.linkage_ratio < 0.0:
        out.append("robot.linkage_ratio must be >= 0")

    positive("engine", "hub_travel", e.hub_travel)
    positive("engine", "hub_moving_mass", e.hub_moving_mass)
    positive("engine", "barrier_peak_force", e.barrier_peak_force)
    if e.hub_damping < 0.0:
        out.append("engine.hub_damping must be >= 0")
    if not 0.0 <= e.stop_restitution <= 1.0:
        out.append("engine.stop_restitution must lie in [0, 1]")
    # keeps coil displacement within 0..pre_stretch+max_stroke at the stops
    if e.hub_travel > a.max_stroke:
        out.append("engine.hub_travel must not exceed actuator.max_stroke")

    positive("power", "supply_voltage", p.supply_voltage)
    positive("power", "supply_current", p.supply_current)
    positive("power", "cycle_period", p.cycle_period)
    positive("power", "on_duration", p.on_duration)
    if not p.on_duration < p.cycle_period:
        out.append("power.on_duration must be shorter than cycle_period")
    if not 0.0 < p.pair_split_fraction <= 0.5:
        out.append("power.pair_split_fraction must lie in (0, 0.5] "
                   "(two coils share the supply)")

    if s.n_cycles < 0:
        out.append("scenario.n_cycles must be >= 0")
    positive("scenario", "time_step", s.time_step)
    if s.time_step > 0.0 and p.cycle_period > 0.0:
        steps = p.cycle_period / s.time_step
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            out.append("power.cycle_period must be an integer multiple "
                       "of scenario.time_step")
    if s.duration is not None and s.duration <= 0.0:
        out.append("scenario.duration must be > 0 when given")
    if s.output_interval < s.time_step:
        out.append("scenario.output_interval must be >= time_step")
    else:
        ratio = s.output_interval / s.time_step
        if abs(ratio - round(ratio)) > 1e-9:
            out.append("scenario.output_interval must be an integer "
                       "multiple of time_step")
    return out


# ---------------------------------------------------------------------------
# serialization, overlays, hashing
# ---------------------------------------------------------------------------

def _plain_value(value: Any) -> Any:
    if isinstance(value, enum.Enum):
        return value.value
    return value


def params_to_dict(params: ParameterSet) -> dict[str, dict[str, Any]]:
    """Nested plain-python dict in SI units (JSON-ready)."""
    doc: dict[str, dict[str, Any]] = {}
    for section in _SCHEMA:
        block = getattr(params, section)
        doc[section] = {
            f.name: _plain_value(getattr(block, f.name))
            for f in dataclasses.fields(block)
        }
    return doc


def _toml_literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    raise TypeError(f"cannot serialize {value!r}")


def params_to_toml(params: ParameterSet) -> str:
    """Canonical TOML rendering; reparses to an identical parameter set."""
    lines: list[str] = []
    for section in _SCHEMA:
        lines.append(f"[{section}]")
        block = getattr(params, section)
        for f in dataclasses.fields(block):
            value = _plain_value(getattr(block, f.name))
            if value is None:  # optional field left at its default
                continue
            lines.append(f"{f.name} = {_toml_literal(value)}")
        lines.append("")
    return "\n".join(lines)


def params_to_json(params: ParameterSet) -> str:
    return json.dumps(params_to_dict(params), indent=2)


def config_hash(params: ParameterSet) -> str:
    """Stable sha256 of the resolved parameter set (order-independent)."""
    canonical = json.dumps(params_to_dict(params), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def iter_parameter_paths(params: ParameterSet) -> Iterator[str]:
    for section in _SCHEMA:
        block = getattr(params, section)
        for f in dataclasses.fields(block):
            yield f"{section}.{f.name}"


def get_path(params: ParameterSet, path: str) -> Any:
    """Read a dotted parameter path like 'engine.barrier_peak_force'."""
    section, _, name = path.partition(".")
    if section not in _SCHEMA or name not in _SCHEMA[section]:
        raise KeyError(f"unknown parameter path {path!r}")
    return getattr(getattr(params, section), name)


def set_path(params: ParameterSet, path: str, value: Any) -> ParameterSet:
    """Return a copy of params with one dotted path replaced."""
    section, _, name = path.partition(".")
    if section not in _SCHEMA or name not in _SCHEMA[section]:
        raise KeyError(f"unknown parameter path {path!r}")
    block = dataclasses.replace(getattr(params, section), **{name: value})
    return dataclasses.replace(params, **{section: block})


def apply_overlay(params: ParameterSet, overlay: dict[str, Any]) -> ParameterSet:
    """Apply {'section.key': value} or nested {'section': {key: value}}."""
    for key, value in overlay.items():
        if isinstance(value, dict):
            for name, inner in value.items():
                params = set_path(params, f"{key}.{name}",
                                  _coerce_field(key, name, inner))
        else:
            section, _, name = key.partition(".")
            params = set_path(params, key, _coerce_field(section, name, value))
    return params

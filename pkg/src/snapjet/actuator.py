"""SMA coil thermomechanics: lumped heating, hysteresis, spring force.

Each coil is a single thermal node obeying

    C_th dT/dt = P_el - hA (T - T_water)

advanced with the exact exponential update, so a step can never
overshoot the steady state T_water + P/hA nor undershoot ambient while
cooling.  The austenite fraction follows cosine transformation kinetics
with hysteresis: heating maps [A_s, A_f] onto [0, 1], cooling maps
[M_f, M_s] symmetrically.  Minor loops are handled by freezing the
fraction when the temperature reverses inside a transformation band:
on the heating branch the fraction can only grow, on the cooling branch
only shrink, which also returns a closed major loop to exactly 0.

Force is the classic coil-spring rate with a phase-interpolated shear
modulus, F = G(xi) d^4 x / (8 D^3 n), pulling only (never pushes when
slack).  Stress-dependent shifts of the transformation temperatures are
deliberately not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .params import ActuatorParams


@dataclass(frozen=True)
class SmaState:
    """One coil: thermal node, transformation state and stretch."""

    temperature: float            # degC
    austenite_fraction: float     # 0 = full martensite, 1 = full austenite
    displacement: float           # m, extension from coil-free length
    heating_branch: bool          # last temperature movement was upward


def initial_state(params: ActuatorParams, water_temperature: float,
                  displacement: float | None = None) -> SmaState:
    """Cold coil in equilibrium with the water, at assembly stretch."""
    x = params.pre_stretch if displacement is None else displacement
    return SmaState(temperature=water_temperature, austenite_fraction=0.0,
                    displacement=x, heating_branch=False)


def step_temperature(state: SmaState, params: ActuatorParams,
                     electrical_power: float, water_temperature: float,
                     dt: float) -> SmaState:
    """Advance the thermal node by dt with the exact exponential update.

    electrical_power is the Joule heating of this coil in watts (zero
    when unpowered).  The heating flag follows the sign of the
    temperature change and is left untouched when the node is already
    at steady state.
    """
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    if electrical_power < 0.0:
        raise ValueError("electrical_power must be >= 0")
    t_inf = water_temperature + electrical_power / params.convective_coefficient_area
    decay = math.exp(-dt * params.convective_coefficient_area
                     / params.thermal_capacitance)
    t_new = t_inf + (state.temperature - t_inf) * decay
    if t_new > state.temperature:
        branch = True
    elif t_new < state.temperature:
        branch = False
    else:
        branch = state.heating_branch
    return replace(state, temperature=t_new, heating_branch=branch)


def phase_fraction(temperature: float, heating_branch: bool,
                   params: ActuatorParams) -> float:
    """Major-loop austenite fraction at a temperature, per branch.

    Heating branch: 0 below A_s, cosine ramp on [A_s, A_f], 1 above.
    Cooling branch: 1 above M_s, cosine ramp on [M_f, M_s], 0 below.
    Monotone non-decreasing in temperature on either branch.
    """
    if heating_branch:
        lo, hi = params.austenite_start, params.austenite_finish
    else:
        lo, hi = params.martensite_finish, params.martensite_start
    if temperature <= lo:
        return 0.0
    if temperature >= hi:
        return 1.0
    return 0.5 * (1.0 - math.cos(math.pi * (temperature - lo) / (hi - lo)))


def update_phase(state: SmaState, params: ActuatorParams) -> SmaState:
    """Apply the hysteresis memory rule at the state's temperature.

    The fraction never decreases while heating and never increases
    while cooling; between the bands the major-loop curve saturates and
    the min/max rule freezes the minor-loop value.
    """
    curve = phase_fraction(state.temperature, state.heating_branch, params)
    if state.heating_branch:
        xi = max(state.austenite_fraction, curve)
    else:
        xi = min(state.austenite_fraction, curve)
    return replace(state, austenite_fraction=xi)


def advance(state: SmaState, params: ActuatorParams, electrical_power: float,
            water_temperature: float, dt: float) -> SmaState:
    """One full per-step coil update: thermal node, then phase memory."""
    return update_phase(
        step_temperature(state, params, electrical_power, water_temperature, dt),
        params,
    )


def spring_force(state: SmaState, params: ActuatorParams) -> float:
    """Contractile pull of one coil at its current stretch, in newtons.

    Linear in displacement and in the phase-interpolated shear modulus;
    a slack coil (negative displacement) pulls nothing.
    """
    x = state.displacement
    if x <= 0.0:
        return 0.0
    return params.spring_rate(state.austenite_fraction) * x

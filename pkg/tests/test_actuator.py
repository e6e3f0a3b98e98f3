"""Coil thermomechanics: exponential heating, hysteresis, spring force."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapjet import actuator
from snapjet.params import DEFAULTS

ACT = DEFAULTS.actuator
WATER = DEFAULTS.robot.water_temperature
POWER = DEFAULTS.power.coil_power()


def heat_for(state, power, duration, dt):
    steps = int(round(duration / dt))
    for _ in range(steps):
        state = actuator.advance(state, ACT, power, WATER, dt)
    return state


# ---------------------------------------------------------------------------
# thermal node
# ---------------------------------------------------------------------------

def test_steady_state_temperature():
    # T_inf = T_water + P / hA; one huge exact step lands there
    state = actuator.initial_state(ACT, WATER)
    state = actuator.step_temperature(state, ACT, POWER, WATER, 1e9)
    expected = WATER + POWER / ACT.convective_coefficient_area
    assert state.temperature == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(140.0)


def test_exact_update_never_overshoots():
    state = actuator.initial_state(ACT, WATER)
    t_inf = WATER + POWER / ACT.convective_coefficient_area
    for _ in range(500):
        state = actuator.step_temperature(state, ACT, POWER, WATER, 0.05)
        assert WATER <= state.temperature <= t_inf


def test_exact_step_composition():
    # one exact step of 2 s equals twenty exact steps of 0.1 s
    one = actuator.step_temperature(
        actuator.initial_state(ACT, WATER), ACT, POWER, WATER, 2.0)
    many = actuator.initial_state(ACT, WATER)
    for _ in range(20):
        many = actuator.step_temperature(many, ACT, POWER, WATER, 0.1)
    assert many.temperature == pytest.approx(one.temperature, rel=1e-12)


def test_exponential_matches_fine_euler_over_duty_cycle():
    """Exact update vs forward Euler at dt/1000 across heat + cool."""
    dt = 1e-3
    state = actuator.initial_state(ACT, WATER)
    temp_euler = state.temperature
    tau_inv = ACT.convective_coefficient_area / ACT.thermal_capacitance
    worst = 0.0
    for step in range(5000):  # one 5 s duty cycle
        powered = step * dt < DEFAULTS.power.on_duration
        power = POWER if powered else 0.0
        state = actuator.step_temperature(state, ACT, power, WATER, dt)
        t_inf = WATER + power / ACT.convective_coefficient_area
        fine = dt / 1000.0
        for _ in range(1000):
            temp_euler += fine * tau_inv * (t_inf - temp_euler)
        denom = max(abs(temp_euler - WATER), 1.0)
        worst = max(worst, abs(state.temperature - temp_euler) / denom)
    assert worst < 1e-3


def test_negative_dt_rejected():
    state = actuator.initial_state(ACT, WATER)
    with pytest.raises(ValueError):
        actuator.step_temperature(state, ACT, POWER, WATER, -1.0)


# ---------------------------------------------------------------------------
# transformation kinetics
# ---------------------------------------------------------------------------

def test_heating_midpoint_is_half():
    assert actuator.phase_fraction(73.0, True, ACT) == pytest.approx(0.5)
    assert actuator.phase_fraction(68.0, True, ACT) == 0.0
    assert actuator.phase_fraction(78.0, True, ACT) == 1.0


def test_cooling_midpoint_is_half():
    assert actuator.phase_fraction(47.0, False, ACT) == pytest.approx(0.5)
    assert actuator.phase_fraction(42.0, False, ACT) == 0.0
    assert actuator.phase_fraction(52.0, False, ACT) == 1.0


def test_closed_major_loop_returns_exactly_zero():
    state = actuator.initial_state(ACT, WATER)
    # sweep well above A_f, then back below M_f, in many small moves
    for temp in [20 + 2 * k for k in range(45)]:          # up to 108
        state = actuator.advance(
            state.__class__(temp, state.austenite_fraction,
                            state.displacement, True), ACT, 0.0, temp, 0.0)
    assert state.austenite_fraction == 1.0
    for temp in [108 - 2 * k for k in range(45)]:         # back to 20
        state = actuator.advance(
            state.__class__(temp, state.austenite_fraction,
                            state.displacement, False), ACT, 0.0, temp, 0.0)
    assert state.austenite_fraction == 0.0


def test_minor_loop_freezes_fraction():
    # heat into the band, then cool a little: fraction must hold
    state = actuator.initial_state(ACT, WATER)
    state = heat_for(state, POWER, 0.9, 1e-3)
    mid = state.austenite_fraction
    assert 0.0 < mid < 1.0
    cooled = actuator.advance(state, ACT, 0.0, WATER, 0.05)
    assert cooled.temperature < state.temperature
    assert cooled.austenite_fraction == mid  # above M_s: memory holds


@given(st.lists(st.floats(min_value=0.0, max_value=130.0), min_size=1,
                max_size=30))
@settings(max_examples=200, deadline=None)
def test_fraction_always_in_unit_interval(temps):
    state = actuator.initial_state(ACT, WATER)
    for target in temps:
        branch = target >= state.temperature
        state = state.__class__(target, state.austenite_fraction,
                                state.displacement, branch)
        state = actuator.update_phase(state, ACT)
        assert 0.0 <= state.austenite_fraction <= 1.0


@given(st.floats(min_value=40.0, max_value=80.0),
       st.floats(min_value=0.0, max_value=10.0))
@settings(max_examples=100, deadline=None)
def test_heating_never_lowers_fraction(start_temp, dtemp):
    state = actuator.initial_state(ACT, WATER)
    state = state.__class__(start_temp, 0.4, state.displacement, True)
    before = actuator.update_phase(state, ACT).austenite_fraction
    hotter = state.__class__(start_temp + dtemp, before,
                             state.displacement, True)
    after = actuator.update_phase(hotter, ACT).austenite_fraction
    assert after >= before


# ---------------------------------------------------------------------------
# spring force
# ---------------------------------------------------------------------------

def test_spring_force_hand_oracle():
    # k_M = G_M d^4 / (8 D^3 n) = 40.6476 N/m at the datasheet geometry,
    # so 36 mm of stretch pulls 1.46331 N cold
    state = actuator.initial_state(ACT, WATER, displacement=0.036)
    assert actuator.spring_force(state, ACT) == pytest.approx(1.46331,
                                                              rel=1e-4)


def test_spring_force_austenite_ratio():
    cold = actuator.initial_state(ACT, WATER, displacement=0.02)
    hot = cold.__class__(cold.temperature, 1.0, 0.02, True)
    ratio = actuator.spring_force(hot, ACT) / actuator.spring_force(cold, ACT)
    assert ratio == pytest.approx(25.0 / 7.5, rel=1e-9)


def test_slack_coil_pulls_nothing():
    state = actuator.initial_state(ACT, WATER, displacement=-1e-3)
    assert actuator.spring_force(state, ACT) == 0.0


@given(st.floats(min_value=0.0, max_value=0.05),
       st.floats(min_value=0.0, max_value=0.05),
       st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_spring_force_monotone_in_stretch_and_fraction(x1, x2, f1, f2):
    lo_x, hi_x = sorted((x1, x2))
    lo_f, hi_f = sorted((f1, f2))
    base = actuator.initial_state(ACT, WATER)
    force = lambda x, f: actuator.spring_force(
        base.__class__(base.temperature, f, x, False), ACT)
    assert force(hi_x, lo_f) >= force(lo_x, lo_f)
    assert force(lo_x, hi_f) >= force(lo_x, lo_f)

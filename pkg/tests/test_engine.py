"""Double well, hub stepping, stops, energy bookkeeping, bell volume."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapjet import actuator, engine
from snapjet.actuator import SmaState
from snapjet.engine import EngineState
from snapjet.params import DEFAULTS

ENG = DEFAULTS.engine
ACT = DEFAULTS.actuator
ROB = DEFAULTS.robot
A = ENG.half_travel


def coil_pair(y: float, xi_top: float, xi_bottom: float):
    top_x, bottom_x = engine.coil_extensions(y, ACT, ENG)
    top = SmaState(20.0, xi_top, top_x, True)
    bottom = SmaState(20.0, xi_bottom, bottom_x, False)
    return top, bottom


def run_hub(xi_top: float, xi_bottom: float, y0: float, dt: float = 1e-4,
            steps: int = 30000, eng=ENG):
    """Integrate the hub with frozen coil fractions, kinematic stretches."""
    state = EngineState(hub_position=y0, hub_velocity=0.0)
    for _ in range(steps):
        top, bottom = coil_pair(state.hub_position, xi_top, xi_bottom)
        state = engine.step_hub(state, top, bottom, eng, ACT, dt)
    return state


# ---------------------------------------------------------------------------
# the well itself
# ---------------------------------------------------------------------------

def test_barrier_scale_hand_oracle():
    # U0 = (3 sqrt(3) / 8) F_pk a = 0.038971143 J at F_pk 6 N, a 10 mm
    eng = replace(ENG, barrier_peak_force=6.0, hub_travel=0.02)
    assert engine.barrier_scale(eng) == pytest.approx(0.038971143, rel=1e-8)


def test_well_minima_and_barrier():
    assert engine.well_potential(A, ENG) == pytest.approx(0.0, abs=1e-15)
    assert engine.well_potential(-A, ENG) == pytest.approx(0.0, abs=1e-15)
    assert engine.well_potential(0.0, ENG) == pytest.approx(
        engine.barrier_scale(ENG), rel=1e-12)


def test_peak_restoring_force_at_design_point():
    y_star = A / math.sqrt(3.0)
    assert engine.well_force(y_star, ENG) == pytest.approx(
        ENG.barrier_peak_force, rel=1e-12)
    assert engine.well_force(-y_star, ENG) == pytest.approx(
        -ENG.barrier_peak_force, rel=1e-12)


@given(st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_untilted_well_is_exactly_even(frac):
    y = frac * A
    assert engine.well_potential(y, ENG) == engine.well_potential(-y, ENG)
    assert engine.well_force(y, ENG) == -engine.well_force(-y, ENG)


def test_tilt_biases_the_wells():
    tilted = replace(ENG, well_tilt_force=0.8)
    drop = engine.well_potential(A, tilted) - engine.well_potential(-A, tilted)
    assert drop == pytest.approx(2 * 0.8 * A, rel=1e-12)


# ---------------------------------------------------------------------------
# coil coupling
# ---------------------------------------------------------------------------

@given(st.floats(min_value=-1.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_coil_extensions_stay_loaded(frac):
    y = frac * A
    top, bottom = engine.coil_extensions(y, ACT, ENG)
    assert ACT.pre_stretch <= top <= ACT.pre_stretch + ENG.hub_travel
    assert ACT.pre_stretch <= bottom <= ACT.pre_stretch + ENG.hub_travel
    assert top + bottom == pytest.approx(2 * (ACT.pre_stretch + A), rel=1e-12)


def test_cold_pairs_form_centering_spring():
    # both pairs martensitic: net coil force is -4 k_M y
    k_m = ACT.spring_rate(0.0)
    for frac in (-0.9, -0.4, 0.2, 0.7):
        y = frac * A
        state = EngineState(hub_position=y, hub_velocity=0.0)
        top, bottom = coil_pair(y, 0.0, 0.0)
        net = engine.net_hub_force(state, top, bottom, ENG, ACT)
        expected = engine.well_force(y, ENG) - 4.0 * k_m * y
        assert net == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# hub stepping
# ---------------------------------------------------------------------------

def test_hot_top_pair_snaps_the_hub_across():
    state = run_hub(xi_top=1.0, xi_bottom=0.0, y0=-A)
    assert state.hub_position > 0.9 * A
    assert state.snap_count == 1


def test_cold_pairs_leave_hub_in_its_well():
    state = run_hub(xi_top=0.0, xi_bottom=0.0, y0=-A)
    assert state.hub_position < -0.9 * A
    assert state.snap_count == 0


def test_stop_clamp_and_restitution():
    eng = replace(ENG, hub_damping=0.0)
    state = EngineState(hub_position=0.98 * A, hub_velocity=2.0)
    top, bottom = coil_pair(state.hub_position, 0.0, 0.0)
    dt = 1e-3  # long enough to fly past the stop
    stepped, energy = engine.step_hub_energy(state, top, bottom, eng, ACT, dt)
    assert stepped.hub_position == A
    assert stepped.hub_velocity < 0.0
    v_hit = -stepped.hub_velocity / eng.stop_restitution
    expected_loss = 0.5 * eng.hub_moving_mass * v_hit**2 \
        * (1.0 - eng.stop_restitution**2)
    assert energy.stop_loss == pytest.approx(expected_loss, rel=1e-12)


@given(st.floats(min_value=-0.95, max_value=0.95),
       st.floats(min_value=-0.5, max_value=0.5),
       st.floats(min_value=0.0, max_value=1.0),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=300, deadline=None)
def test_step_energy_identity(frac, vel, xi_top, xi_bottom):
    """Semi-implicit step bookkeeping: dKE equals conservative work minus
    damping heat minus the first-order remainder m dv^2 / 2, exactly."""
    y = frac * A
    state = EngineState(hub_position=y, hub_velocity=vel)
    top, bottom = coil_pair(y, xi_top, xi_bottom)
    dt = 1e-4
    stepped, energy = engine.step_hub_energy(state, top, bottom, ENG, ACT, dt)
    if abs(stepped.hub_position) == A:
        return  # stop hit: loss term checked separately
    m = ENG.hub_moving_mass
    dv = stepped.hub_velocity - state.hub_velocity
    dy = stepped.hub_position - state.hub_position
    d_ke = 0.5 * m * (stepped.hub_velocity**2 - state.hub_velocity**2)
    work_well = engine.well_force(y, ENG) * dy
    balance = energy.work_sma + work_well - energy.dissipated_damping \
        - 0.5 * m * dv * dv
    assert d_ke == pytest.approx(balance, rel=1e-9, abs=1e-18)


def snap_budget_residual(dt: float) -> float:
    """Relative physical budget imbalance over one full snap.

    Input energy (coil work plus well release) minus the tracked sinks
    (damping heat, stop losses, final kinetic energy), relative to the
    input.  Any imbalance is the scheme's first-order remainder, so it
    must vanish as dt does.
    """
    state = EngineState(hub_position=-A, hub_velocity=0.0)
    w_sma = e_damp = e_stop = 0.0
    for _ in range(int(round(0.4 / dt))):
        top, bottom = coil_pair(state.hub_position, 1.0, 0.0)
        state, energy = engine.step_hub_energy(state, top, bottom,
                                               ENG, ACT, dt)
        w_sma += energy.work_sma
        e_damp += energy.dissipated_damping
        e_stop += energy.stop_loss
    assert state.hub_position > 0.9 * A
    release = w_sma - (engine.well_potential(state.hub_position, ENG)
                       - engine.well_potential(-A, ENG))
    kinetic = 0.5 * ENG.hub_moving_mass * state.hub_velocity**2
    return abs(release - e_damp - e_stop - kinetic) / release


def test_snap_energy_budget_closes_at_oracle_step():
    # the refined (default dt / 100) integration closes the books
    assert snap_budget_residual(1e-6) < 1e-2


def test_snap_energy_residual_is_discretization():
    # the imbalance at the default step shrinks strongly under refinement,
    # so it is numerical-heating remainder rather than a physics leak
    assert snap_budget_residual(1e-4) / snap_budget_residual(1e-6) > 10.0


# ---------------------------------------------------------------------------
# bell kinematics
# ---------------------------------------------------------------------------

def test_bell_volume_rest_at_stops_exact():
    assert engine.bell_volume(A, ROB, A) == ROB.bell_volume_rest
    assert engine.bell_volume(-A, ROB, A) == ROB.bell_volume_rest


def test_bell_volume_peak_hand_oracle():
    # V(0) = V_rest (1 + lam a / r)^2 with r = 55 mm, lam 0.6, a 1.05 mm
    ratio = 1.0 + ROB.linkage_ratio * A / (0.5 * ROB.body_diameter)
    expected = ROB.bell_volume_rest * ratio * ratio
    assert engine.bell_volume(0.0, ROB, A) == pytest.approx(expected,
                                                            rel=1e-12)
    assert expected == pytest.approx(1.1395647e-3, rel=1e-6)


@given(st.floats(min_value=-1.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_bell_volume_even_and_peaked(frac):
    y = frac * A
    v = engine.bell_volume(y, ROB, A)
    assert engine.bell_volume(-y, ROB, A) == v
    assert ROB.bell_volume_rest <= v <= engine.bell_volume(0.0, ROB, A)

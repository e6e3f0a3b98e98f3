"""Acceptance gate: the nine headline behaviors, one test each.

Every test prints a single PASS/FAIL line carrying the measured
numbers, so a -s run of this module doubles as the acceptance report.
The tolerances here are the external contract; the per-module suites
pin the implementation details behind them.
"""

import math
import time
from dataclasses import replace

import numpy as np

from snapjet import actuator, engine
from snapjet.actuator import SmaState, initial_state, spring_force
from snapjet.analysis import (ForceTrace, build_report, integrate_impulse,
                              read_force_csv, synchronize_trials)
from snapjet.calibrate import calibrate, load_targets_file, make_targets
from snapjet.optimize import (BoundedParameter, DesignVector, Objective,
                              ObjectiveKind, OptimizationMethod, minimize,
                              optimize, sweep_metrics)
from snapjet.params import DEFAULTS, Pair, ScenarioKind, StrokeDirection, \
    apply_overlay
from snapjet.sim import average_speed, run_scenario, speed_profile

from conftest import DATA_DIR, trace_files
from test_engine import snap_budget_residual


def _verdict(number: int, label: str, checks):
    """checks: [(ok, text)]; prints one line and asserts the failures."""
    ok = all(flag for flag, _ in checks)
    detail = "; ".join(text for _, text in checks)
    print(f"[{'PASS' if ok else 'FAIL'}] acceptance {number} ({label}): "
          f"{detail}")
    failing = [text for flag, text in checks if not flag]
    assert not failing, f"acceptance {number} ({label}): " \
        + "; ".join(failing)


def _load_trials(direction: str):
    return [read_force_csv(p, direction=StrokeDirection(direction))
            for p in trace_files(direction)]


# ---------------------------------------------------------------------------

def test_criterion_1_jet_thrust_scaling_law():
    t0 = time.monotonic()
    taus = np.linspace(0.07, 0.28, 8)
    rows = sweep_metrics(DEFAULTS, "stroke.contraction_duration", taus)
    thrust = np.array([row["mean_thrust_N"] for row in rows])
    slope = np.polyfit(np.log(taus), np.log(thrust), 1)[0]
    elapsed = time.monotonic() - t0
    _verdict(1, "mean thrust follows the inverse-square stroke-time law", [
        (abs(slope + 2.0) <= 0.01, f"log-log slope {slope:+.4f} = -2.00+-0.01"),
        (elapsed < 5.0, f"runtime {elapsed:.2f} s < 5 s"),
    ])


def test_criterion_2_bench_trace_reduction():
    t0 = time.monotonic()
    expected = {
        "downstroke": ((0.200, 0.140, 0.660), (-0.03, 0.18, -0.12)),
        "upstroke": ((0.200, 0.135, 0.665), (0.00, 0.15, -0.13)),
    }
    checks = []
    for direction, (durations, impulses) in expected.items():
        report = build_report(_load_trials(direction))
        for name, want_dur, want_imp in zip(
                ("intake", "jet", "rebound"), durations, impulses):
            phase = report.phases[name]
            checks.append((
                abs(phase.duration - want_dur) <= 0.010,
                f"{direction} {name} {phase.duration * 1e3:.0f} ms "
                f"= {want_dur * 1e3:.0f}+-10 ms"))
            checks.append((
                abs(phase.impulse - want_imp) <= 0.02,
                f"{direction} {name} {phase.impulse:+.4f} N s "
                f"= {want_imp:+.2f}+-0.02"))
        checks.append((
            0.015 <= report.total_impulse <= 0.035,
            f"{direction} total {report.total_impulse:+.4f} N s "
            f"in +0.02..0.03 band"))
    elapsed = time.monotonic() - t0
    checks.append((elapsed < 1.0, f"runtime {elapsed:.2f} s < 1 s"))
    _verdict(2, "shipped bench trials reduce to the published stroke table",
             checks)


def test_criterion_3_fit_to_measured_targets():
    t0 = time.monotonic()
    targets, free, start, fit = load_targets_file(
        DATA_DIR / "targets_measured.toml")
    result = calibrate(DEFAULTS, targets, free, start=start, **fit)
    elapsed = time.monotonic() - t0
    checks = [(result.feasible, "fit feasible")]
    for row in result.residuals:
        checks.append((abs(row.residual) <= 0.25,
                       f"{row.name} {row.residual:+.1%} within +-25%"))
    checks.append((elapsed < 600.0, f"runtime {elapsed:.1f} s < 600 s"))
    _verdict(3, "bounded fit reaches all measured targets", checks)


def test_criterion_4_inverse_recovery_of_known_config():
    t0 = time.monotonic()
    true_overlay = {"robot.linkage_ratio": 0.9,
                    "robot.jet_orifice_area": 1.4e-3,
                    "robot.added_mass_coefficient": 1.2}
    true = apply_overlay(DEFAULTS, true_overlay)
    targets = make_targets(true, ("peak_thrust_down", "impulse_jet_down",
                                  "peak_speed", "avg_speed"))
    free = (BoundedParameter("robot.linkage_ratio", 0.3, 3.0),
            BoundedParameter("robot.jet_orifice_area", 3.0e-4, 3.0e-3),
            BoundedParameter("robot.added_mass_coefficient", 0.3, 8.0))
    result = calibrate(DEFAULTS, targets, free, budget=220, warm_samples=16,
                       seed=1)
    elapsed = time.monotonic() - t0
    _verdict(4, "self-generated targets recovered inside the bounds", [
        (result.feasible, "fit feasible"),
        (result.max_abs_residual < 0.01,
         f"max residual {result.max_abs_residual:.4%} < 1%"),
        (elapsed < 300.0, f"runtime {elapsed:.1f} s < 300 s"),
    ])


def test_criterion_5_bistability_suite():
    a = DEFAULTS.engine.half_travel
    checks = []

    # (a) cold relaxation from 100 random starts finds exactly two wells
    cold = replace(DEFAULTS, scenario=replace(
        DEFAULTS.scenario, kind=ScenarioKind.FIXED_MOUNT, n_cycles=0,
        duration=4.0))
    rng = np.random.default_rng(42)
    finals = np.array([
        run_scenario(cold, initial_hub_position=float(y0)).hub_pos[-1]
        for y0 in rng.uniform(-a, a, size=100)])
    levels = sorted(set(finals.tolist()))
    two = len(levels) == 2
    mirrored = two and abs(levels[0] + levels[1]) < 1e-15
    near_stops = two and 0.9 * a <= abs(levels[1]) <= a
    checks.append((two, f"{len(levels)} distinct cold equilibria (want 2)"))
    checks.append((mirrored, "equilibria mirror about the midpoint"))
    checks.append((near_stops,
                   f"|y*|/a = {abs(levels[-1]) / a:.4f} close to the stops"))

    # (b) untilted well is exactly even
    for y in rng.uniform(0.0, a, size=200):
        if engine.well_potential(y, DEFAULTS.engine) \
                != engine.well_potential(-y, DEFAULTS.engine):
            checks.append((False, f"U({y:.3e}) != U({-y:.3e})"))
            break
    else:
        checks.append((True, "U(y) == U(-y) exact on 200 draws"))

    # (c) energy budget per snap closes at the dt/100 oracle step
    residual = snap_budget_residual(1e-6)
    checks.append((residual < 0.01,
                   f"snap budget residual {residual:.3%} < 1% at dt/100"))

    # (d) mirror-symmetry of single up and down strokes
    base = replace(DEFAULTS, scenario=replace(
        DEFAULTS.scenario, kind=ScenarioKind.FIXED_MOUNT, n_cycles=1))
    up = run_scenario(replace(base, scenario=replace(
        base.scenario, first_active_pair=Pair.TOP)))
    down = run_scenario(replace(base, scenario=replace(
        base.scenario, first_active_pair=Pair.BOTTOM)))
    hub_gap = float(np.max(np.abs(up.hub_pos + down.hub_pos)))
    thrust_gap = float(np.max(np.abs(up.thrust - down.thrust)))
    temp_gap = float(np.max(np.abs(up.temp_top - down.temp_bot)))
    checks.append((hub_gap <= 1e-12,
                   f"mirrored hub paths agree to {hub_gap:.1e} m"))
    checks.append((thrust_gap <= 1e-12,
                   f"mirrored thrust agrees to {thrust_gap:.1e} N"))
    checks.append((temp_gap <= 1e-12,
                   f"swapped coil temperatures agree to {temp_gap:.1e} K"))
    _verdict(5, "double well: two equilibria, even, closed books, mirrored",
             checks)


def test_criterion_6_actuator_suite():
    act = DEFAULTS.actuator
    t_w = DEFAULTS.robot.water_temperature
    checks = []

    # closed major hysteresis loop: full transformation and exact return
    state = initial_state(act, t_w)
    for _ in range(2000):
        state = actuator.advance(state, act, 60.0, t_w, 1e-3)
    hot_fraction = state.austenite_fraction
    for _ in range(10000):
        state = actuator.advance(state, act, 0.0, t_w, 1e-3)
    checks.append((hot_fraction == 1.0,
                   f"fully hot fraction {hot_fraction} == 1.0"))
    checks.append((state.austenite_fraction == 0.0,
                   f"cooled fraction {state.austenite_fraction} == 0.0"))

    # exact exponential update vs forward Euler at dt/1000
    dt = 1e-3
    sub = 1000
    exact = initial_state(act, t_w)
    t_euler = t_w
    worst = 0.0
    peak_rise = 0.0
    for i in range(5000):
        power = 60.0 if i * dt < 2.0 else 0.0
        exact = actuator.step_temperature(exact, act, power, t_w, dt)
        t_inf = t_w + power / act.convective_coefficient_area
        k = act.convective_coefficient_area / act.thermal_capacitance
        for _ in range(sub):
            t_euler += (dt / sub) * k * (t_inf - t_euler)
        worst = max(worst, abs(exact.temperature - t_euler))
        peak_rise = max(peak_rise, exact.temperature - t_w)
    rel = worst / peak_rise
    checks.append((rel < 1e-3,
                   f"thermal update vs dt/1000 Euler {rel:.2e} < 0.1%"))

    # spring force monotone in stretch and fraction over random coils
    rng = np.random.default_rng(9)
    violations = 0
    for _ in range(200):
        coil = replace(act,
                       wire_diameter=rng.uniform(2e-4, 6e-4),
                       coil_diameter=rng.uniform(2e-3, 8e-3),
                       active_turns=int(rng.integers(8, 31)))
        x1, x2 = np.sort(rng.uniform(0.0, 0.05, size=2))
        f1, f2 = np.sort(rng.uniform(0.0, 1.0, size=2))
        lo = spring_force(SmaState(t_w, f1, x1, False), coil)
        hi_x = spring_force(SmaState(t_w, f1, x2, False), coil)
        hi_f = spring_force(SmaState(t_w, f2, x1, False), coil)
        if hi_x < lo or hi_f < lo:
            violations += 1
    checks.append((violations == 0,
                   f"{violations} monotonicity violations in 200 draws"))
    _verdict(6, "coil: exact loop closure, exact thermal update, monotone",
             checks)


def test_criterion_7_free_swim_sanity():
    t0 = time.monotonic()
    params = replace(DEFAULTS, scenario=replace(
        DEFAULTS.scenario, kind=ScenarioKind.FREE_SWIM, n_cycles=7))
    trajectory = run_scenario(params)
    times, speeds = speed_profile(trajectory)
    period = params.power.cycle_period
    ratios = []
    for k in range(params.scenario.n_cycles):
        window = (times >= k * period) & (times < (k + 1) * period)
        tail = (times >= (k + 1) * period - 1.0) & (times < (k + 1) * period)
        ratios.append(speeds[window].max() / speeds[tail].mean())
    avg_mm_s = 1e3 * average_speed(trajectory)
    elapsed = time.monotonic() - t0
    _verdict(7, "free swim: forward, pulsed with glide, plausible speed", [
        (trajectory.net_displacement() > 0.0,
         f"net displacement {trajectory.net_displacement():+.4f} m forward"),
        (trajectory.snap_count == 7,
         f"{trajectory.snap_count} snaps in 7 cycles"),
        (min(ratios) >= 10.0,
         f"pulse/glide speed ratio min {min(ratios):.1f} >= 10"),
        (2.74 / 3.0 <= avg_mm_s <= 2.74 * 3.0,
         f"average speed {avg_mm_s:.2f} mm/s within 3x of 2.74 mm/s"),
        (elapsed < 30.0, f"runtime {elapsed:.1f} s < 30 s"),
    ])


def test_criterion_8_analysis_exactness():
    checks = []
    # phase impulses partition the stroke exactly
    for direction in ("downstroke", "upstroke"):
        report = build_report(_load_trials(direction))
        exact = report.total_impulse \
            == math.fsum(p.impulse for p in report.phases.values())
        checks.append((exact, f"{direction} impulse partition exact"))
    trace = _load_trials("downstroke")[0]
    t = trace.times
    gap = abs(integrate_impulse(trace, (t[5], t[150]))
              + integrate_impulse(trace, (t[150], t[400]))
              - integrate_impulse(trace, (t[5], t[400])))
    checks.append((gap <= 1e-12, f"window additivity gap {gap:.1e}"))

    # half sine at 500 Hz against the closed form
    tau, f0 = 0.14, 4.0
    grid = np.arange(0.0, tau + 1e-12, 0.002)
    half_sine = ForceTrace(times=grid,
                           forces=f0 * np.sin(np.pi * grid / tau))
    impulse = integrate_impulse(half_sine, (0.0, tau))
    err = abs(impulse - 2.0 * f0 * tau / np.pi) / (2.0 * f0 * tau / np.pi)
    checks.append((err < 1e-3, f"half-sine impulse error {err:.2e} < 0.1%"))

    # synchronization is idempotent
    once = synchronize_trials(_load_trials("downstroke"))
    twice = synchronize_trials(once)
    stable = all(np.array_equal(x.times, y.times)
                 and np.array_equal(x.forces, y.forces)
                 for x, y in zip(once, twice))
    checks.append((stable, "synchronization idempotent"))
    _verdict(8, "impulse bookkeeping exact, quadrature sharp, sync stable",
             checks)


def test_criterion_9_optimizer_suite():
    checks = []

    # quadratic test function
    def quadratic(values):
        x, y = values
        return (x - 0.3) ** 2 + (y + 0.2) ** 2, True, {}

    box = (BoundedParameter("a", -1.0, 1.0), BoundedParameter("b", -1.0, 1.0))
    best, _ = minimize(quadratic, box, (0.0, 0.0), budget=150)
    err = max(abs(best.values[0] - 0.3), abs(best.values[1] + 0.2))
    checks.append((err < 1e-3, f"quadratic optimum within {err:.1e} < 1e-3"))

    # the closed-form stroke model drives contraction time to its bound
    surrogate = optimize(
        DesignVector((BoundedParameter("stroke.contraction_duration",
                                       0.1, 0.5),), (0.3,)),
        Objective(ObjectiveKind.MAX_NET_IMPULSE_PER_STROKE, DEFAULTS),
        budget=60)
    checks.append((surrogate.design.values[0] == 0.1,
                   f"surrogate tau -> lower bound "
                   f"({surrogate.design.values[0]:.3f})"))

    # full-model heating-time optimum is interior, grid cross-checked
    free = (BoundedParameter("power.on_duration", 1.2, 4.8),)
    objective = Objective(ObjectiveKind.MAX_AVG_SPEED, DEFAULTS,
                          horizon_cycles=3)
    grid = optimize(DesignVector(free, (3.0,)), objective, budget=50,
                    method=OptimizationMethod.GRID)
    refined = optimize(DesignVector(free, (3.0,)), objective, budget=40)
    axis = np.linspace(1.2, 4.8, 50)
    spacing = axis[1] - axis[0]
    grid_on = grid.design.values[0]
    nm_on = refined.design.values[0]
    checks.append((grid.feasible and axis[0] < grid_on < axis[-1],
                   f"grid optimum on_duration {grid_on:.3f} s interior"))
    checks.append((refined.feasible and 1.2 < nm_on < 4.8,
                   f"refined optimum {nm_on:.3f} s interior"))
    checks.append((refined.score <= grid.score + 1e-12,
                   "refinement at least matches the 50-point grid"))
    checks.append((abs(nm_on - grid_on) <= 3.0 * spacing,
                   f"optima agree within 3 grid cells "
                   f"(|{nm_on:.3f} - {grid_on:.3f}| <= {3 * spacing:.3f})"))
    _verdict(9, "search: quadratic, surrogate bound, interior duty optimum",
             checks)

"""Inner time-stepping loop shared by both scenario kinds.

This is the one hot path of the package: a scalar semi-implicit Euler
loop over hundreds of thousands of steps per run, called thousands of
times by the calibrator and the optimizer.  It is written as a plain
float-only function so numba can JIT it; if numba is unavailable the
same function runs under CPython, just slower.

The arithmetic here intentionally mirrors, operation for operation, the
public single-step functions in actuator.py and engine.py; a regression
test locks the two paths together.  Keep them in sync when editing.
"""

from __future__ import annotations

import math

import numpy as np


def _integrate(
    n_steps: int,
    decim: int,
    dt: float,
    fixed_mount: bool,
    first_pair: int,        # 0 = top, 1 = bottom
    steps_per_cycle: int,
    n_cycles: int,
    on_duration: float,
    coil_power: float,
    cutoff_on_snap: bool,
    # thermal
    water_temp: float,
    heat_capacity: float,
    conductance: float,
    # transformation temperatures
    aust_start: float,
    aust_finish: float,
    mart_start: float,
    mart_finish: float,
    # spring
    shear_mart: float,
    shear_span: float,
    wire_d4: float,
    geom_denom: float,
    pre_stretch: float,
    half_travel: float,
    # engine
    hub_mass: float,
    hub_damping: float,
    barrier_u0: float,
    tilt: float,
    restitution: float,
    # bell / jet
    vol_rest: float,
    r_rest: float,
    linkage: float,
    jet_scale: float,       # rho / orifice_area
    intake_factor: float,
    # body
    body_mass_eff: float,
    drag_half_rho_cd_a: float,
    # initial state
    y0: float,
    v0: float,
    temp_top0: float,
    temp_bot0: float,
    xi_top0: float,
    xi_bot0: float,
    # outputs (preallocated, length n_steps // decim + 1)
    out_time: np.ndarray,
    out_body_pos: np.ndarray,
    out_body_vel: np.ndarray,
    out_hub_pos: np.ndarray,
    out_hub_vel: np.ndarray,
    out_temp_top: np.ndarray,
    out_temp_bot: np.ndarray,
    out_xi_top: np.ndarray,
    out_xi_bot: np.ndarray,
    out_volume: np.ndarray,
    out_thrust: np.ndarray,
    out_drag: np.ndarray,
    out_pair: np.ndarray,
    out_snaps: np.ndarray,
):
    y = y0
    v = v0
    temp_top = temp_top0
    temp_bot = temp_bot0
    xi_top = xi_top0
    xi_bot = xi_bot0
    heat_top = False
    heat_bot = False
    body_x = 0.0
    body_v = 0.0
    snap_count = 0
    diverged = -1

    a = half_travel
    decay = math.exp(-dt * conductance / heat_capacity)
    damp_denom = 1.0 + dt * hub_damping / hub_mass
    vol = vol_rest * ((r_rest + linkage * (a - abs(y))) / r_rest) ** 2
    thrust = 0.0

    out_time[0] = 0.0
    out_body_pos[0] = body_x
    out_body_vel[0] = body_v
    out_hub_pos[0] = y
    out_hub_vel[0] = v
    out_temp_top[0] = temp_top
    out_temp_bot[0] = temp_bot
    out_xi_top[0] = xi_top
    out_xi_bot[0] = xi_bot
    out_volume[0] = vol
    out_thrust[0] = 0.0
    out_drag[0] = 0.0
    out_pair[0] = first_pair
    out_snaps[0] = 0

    for i in range(n_steps):
        # --- power schedule -------------------------------------------------
        cycle = i // steps_per_cycle
        pair = (cycle + first_pair) % 2
        powered = cycle < n_cycles and (i % steps_per_cycle) * dt < on_duration
        if cutoff_on_snap and snap_count > cycle:
            powered = False
        p_top = coil_power if (powered and pair == 0) else 0.0
        p_bot = coil_power if (powered and pair == 1) else 0.0

        # --- coil thermal nodes + hysteresis memory ------------------------
        t_inf = water_temp + p_top / conductance
        t_new = t_inf + (temp_top - t_inf) * decay
        if t_new > temp_top:
            heat_top = True
        elif t_new < temp_top:
            heat_top = False
        temp_top = t_new
        if heat_top:
            if temp_top <= aust_start:
                curve = 0.0
            elif temp_top >= aust_finish:
                curve = 1.0
            else:
                curve = 0.5 * (1.0 - math.cos(
                    math.pi * (temp_top - aust_start)
                    / (aust_finish - aust_start)))
            if curve > xi_top:
                xi_top = curve
        else:
            if temp_top <= mart_finish:
                curve = 0.0
            elif temp_top >= mart_start:
                curve = 1.0
            else:
                curve = 0.5 * (1.0 - math.cos(
                    math.pi * (temp_top - mart_finish)
                    / (mart_start - mart_finish)))
            if curve < xi_top:
                xi_top = curve

        t_inf = water_temp + p_bot / conductance
        t_new = t_inf + (temp_bot - t_inf) * decay
        if t_new > temp_bot:
            heat_bot = True
        elif t_new < temp_bot:
            heat_bot = False
        temp_bot = t_new
        if heat_bot:
            if temp_bot <= aust_start:
                curve = 0.0
            elif temp_bot >= aust_finish:
                curve = 1.0
            else:
                curve = 0.5 * (1.0 - math.cos(
                    math.pi * (temp_bot - aust_start)
                    / (aust_finish - aust_start)))
            if curve > xi_bot:
                xi_bot = curve
        else:
            if temp_bot <= mart_finish:
                curve = 0.0
            elif temp_bot >= mart_start:
                curve = 1.0
            else:
                curve = 0.5 * (1.0 - math.cos(
                    math.pi * (temp_bot - mart_finish)
                    / (mart_start - mart_finish)))
            if curve < xi_bot:
                xi_bot = curve

        # --- hub step (mirrors engine.step_hub_energy) ----------------------
        x_top = pre_stretch + (a - y)
        x_bot = pre_stretch + (a + y)
        if x_top <= 0.0:
            f_top = 0.0
        else:
            f_top = 2.0 * ((shear_mart + xi_top * shear_span)
                           * wire_d4 / geom_denom * x_top)
        if x_bot <= 0.0:
            f_bot = 0.0
        else:
            f_bot = 2.0 * ((shear_mart + xi_bot * shear_span)
                           * wire_d4 / geom_denom * x_bot)
        grad = 4.0 * barrier_u0 * y * ((y / a) ** 2 - 1.0) / (a * a)
        f_nondamp = f_top - f_bot + (-grad - tilt)

        v_new = (v + dt * f_nondamp / hub_mass) / damp_denom
        y_new = y + dt * v_new
        if y_new > a:
            y_new = a
            v_new = -restitution * v_new
        elif y_new < -a:
            y_new = -a
            v_new = -restitution * v_new
        if y * y_new < 0.0:
            snap_count += 1
        y = y_new
        v = v_new

        # --- jet thrust from the bell volume rate ---------------------------
        vol_new = vol_rest * ((r_rest + linkage * (a - abs(y))) / r_rest) ** 2
        q = (vol_new - vol) / dt
        if q < 0.0:
            thrust = jet_scale * q * q
        else:
            thrust = -intake_factor * jet_scale * q * q
        vol = vol_new

        # --- body -----------------------------------------------------------
        if fixed_mount:
            drag = 0.0
        else:
            drag = drag_half_rho_cd_a * body_v * abs(body_v)
            body_v = body_v + dt * (thrust - drag) / body_mass_eff
            body_x = body_x + dt * body_v

        if not (math.isfinite(y) and math.isfinite(v)
                and math.isfinite(body_v) and math.isfinite(temp_top)):
            diverged = i
            break

        if (i + 1) % decim == 0:
            j = (i + 1) // decim
            out_time[j] = (i + 1) * dt
            out_body_pos[j] = body_x
            out_body_vel[j] = body_v
            out_hub_pos[j] = y
            out_hub_vel[j] = v
            out_temp_top[j] = temp_top
            out_temp_bot[j] = temp_bot
            out_xi_top[j] = xi_top
            out_xi_bot[j] = xi_bot
            out_volume[j] = vol
            out_thrust[j] = thrust
            out_drag[j] = drag_half_rho_cd_a * body_v * abs(body_v) \
                if not fixed_mount else 0.0
            out_pair[j] = pair
            out_snaps[j] = snap_count

    return snap_count, diverged


try:  # JIT when available; the pure-python path is identical, just slow
    from numba import njit

    integrate = njit(cache=True, fastmath=False)(_integrate)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    integrate = _integrate
    HAVE_NUMBA = False

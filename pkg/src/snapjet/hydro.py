"""Pulse-jet thrust and body drag.

Thrust follows the momentum flux of the expelled slug: with volume flow
Q through an orifice of area A, the exhaust speed is Q/A and

    T = (rho Q) (Q / A) = rho Q^2 / A.

Ejection (shrinking bell) pushes the body forward; refilling is not
free, so intake thrust is the same expression scaled by the intake
penalty factor and flipped backward.  For a stroke moving delta-V of
water in a contraction time tau the mean ejection thrust is
rho (delta-V / tau)^2 / A — the inverse-square law in tau that makes a
fast snap worth more impulse than the same volume released slowly.

Drag is the bluff-body quadratic law on the frontal area.  Acceleration
reaction is carried as a constant added-mass coefficient on the total
mass, (1 + C_a) m; the instantaneous-mass variation of the true system
is deliberately left out (documented divergence from a full
variable-mass treatment).
"""

from __future__ import annotations

from dataclasses import dataclass

from .params import RobotParams


@dataclass(frozen=True)
class StrokeProfile:
    """Idealised stroke for surrogate studies: volume and its timing."""

    delta_volume: float           # m^3 moved per stroke
    contraction_duration: float   # s, ejection time
    expansion_duration: float     # s, refill time


@dataclass(frozen=True)
class HydroForces:
    thrust: float                 # N, along the swim axis (+ forward)
    drag: float                   # N, signed with body velocity


def jet_thrust_instantaneous(volume_rate: float, robot: RobotParams) -> float:
    """Thrust from the current rate of bell volume change (m^3/s).

    Negative rate = ejection = forward thrust; positive rate = intake,
    penalised by intake_thrust_factor and directed backward.
    """
    q2 = volume_rate * volume_rate
    scale = robot.water_density / robot.jet_orifice_area
    if volume_rate < 0.0:
        return scale * q2
    return -robot.intake_thrust_factor * scale * q2


def stroke_mean_thrust(profile: StrokeProfile, robot: RobotParams) -> float:
    """Mean ejection thrust of an idealised stroke, rho (dV/tau)^2 / A."""
    if profile.contraction_duration <= 0.0:
        raise ValueError("contraction_duration must be > 0")
    q = profile.delta_volume / profile.contraction_duration
    return robot.water_density * q * q / robot.jet_orifice_area


def stroke_net_impulse(profile: StrokeProfile, robot: RobotParams) -> float:
    """Net impulse of one idealised stroke (ejection minus intake cost).

    rho dV^2 / A (1/tau_con - beta/tau_exp); positive whenever
    beta tau_con < tau_exp, i.e. whenever refilling is slower or cheaper
    than the ejection it feeds.
    """
    if profile.contraction_duration <= 0.0 or profile.expansion_duration <= 0.0:
        raise ValueError("stroke durations must be > 0")
    dv2 = profile.delta_volume * profile.delta_volume
    scale = robot.water_density * dv2 / robot.jet_orifice_area
    return scale * (1.0 / profile.contraction_duration
                    - robot.intake_thrust_factor / profile.expansion_duration)


def drag_force(velocity: float, robot: RobotParams) -> float:
    """Quadratic bluff-body drag, signed with the velocity."""
    return (0.5 * robot.water_density * robot.drag_coefficient
            * robot.frontal_area * velocity * abs(velocity))


def effective_mass(robot: RobotParams) -> float:
    """Body mass plus constant added mass, (1 + C_a) total_mass."""
    return (1.0 + robot.added_mass_coefficient) * robot.total_mass

#!/usr/bin/env python
"""Regenerate the bundled synthetic load-cell traces.

Builds three downstroke and three upstroke trials shaped like bench
recordings of a single stroke: an intake lobe, a sharp jet pulse and a
decaying rebound wobble, plus bounded sensor noise.  The trials peak at
different times (1.0, 1.2, 1.1 s) so they exercise the synchronizer.
After writing the CSVs the script runs the full analysis pipeline on
them and asserts the recovered phase durations and impulses, so a
regeneration that drifts out of tolerance fails loudly instead of
silently corrupting the fixtures.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from snapjet.analysis import build_report, read_force_csv
from snapjet.params import StrokeDirection

SAMPLE_INTERVAL = 0.002          # 500 Hz load cell
TRACE_LENGTH = 2.2               # s
PEAK_TIMES = (1.0, 1.2, 1.1)     # s, per trial
NOISE_HALF_WIDTH = 0.0025        # N, uniform sensor noise bound
RING_FREQ = 9.0                  # Hz, rebound wobble
RING_DEPTH = 0.45

# per-direction stroke recipes: phase durations s, impulses N s, peaks N
DOWN = dict(
    peaks=(5.59, 4.30, 4.09),        # mean 4.66
    intake_duration=0.200, intake_impulse=-0.030, intake_shape="half",
    jet_duration=0.140, jet_impulse=0.180,
    rebound_duration=0.650, rebound_impulse=-0.123,
    seed=3,
)
UP = dict(
    peaks=(2.80, 2.55, 2.45),        # mean 2.60
    intake_duration=0.200, intake_impulse=0.000, intake_shape="full",
    jet_duration=0.135, jet_impulse=0.150,
    rebound_duration=0.655, rebound_impulse=-0.125,
    seed=2,
)
INTAKE_FULL_SINE_AMP = 0.25      # N, balanced lobe when net impulse is 0


def tent(s, tau, k):
    """Unit triangular pulse raised to the power k, support [0, tau]."""
    x = 1.0 - np.abs(2.0 * s / tau - 1.0)
    return np.where((s >= 0.0) & (s <= tau), np.maximum(x, 0.0) ** k, 0.0)


def half_sine(s, tau):
    return np.where((s >= 0.0) & (s <= tau), np.sin(np.pi * s / tau), 0.0)


def full_sine(s, tau):
    return np.where((s >= 0.0) & (s <= tau),
                    np.sin(2.0 * np.pi * s / tau), 0.0)


def ring(s, tau):
    envelope = np.sin(np.pi * s / tau)
    wobble = 1.0 + RING_DEPTH * np.cos(2.0 * np.pi * RING_FREQ * s)
    return np.where((s >= 0.0) & (s <= tau), envelope * wobble, 0.0)


def scaled(shape, times, impulse):
    """Scale a sampled shape so its trapezoid impulse hits the target."""
    area = np.trapezoid(shape, times)
    if area == 0.0:
        raise ValueError("cannot scale a zero-area shape")
    return shape * (impulse / area)


def build_trial(recipe, peak_force, peak_time, rng):
    t = np.arange(int(round(TRACE_LENGTH / SAMPLE_INTERVAL)) + 1) \
        * SAMPLE_INTERVAL
    tau_jet = recipe["jet_duration"]
    tau_in = recipe["intake_duration"]
    tau_reb = recipe["rebound_duration"]
    jet_start = peak_time - 0.5 * tau_jet

    f = np.zeros_like(t)
    # jet: tent pulse whose exponent sets the impulse/peak ratio; the
    # steep base keeps the zero crossings crisp against sensor noise
    mean_peak = sum(recipe["peaks"]) / len(recipe["peaks"])
    k = mean_peak * tau_jet / recipe["jet_impulse"] - 1.0
    f += peak_force * tent(t - jet_start, tau_jet, k)
    # intake lobe ends exactly where the jet begins
    s_in = t - (jet_start - tau_in)
    if recipe["intake_shape"] == "half":
        f += scaled(half_sine(s_in, tau_in), t, recipe["intake_impulse"])
    else:
        f += INTAKE_FULL_SINE_AMP * full_sine(s_in, tau_in)
    # rebound wobble starts where the jet ends
    s_reb = t - (jet_start + tau_jet)
    f += scaled(ring(s_reb, tau_reb), t, recipe["rebound_impulse"])
    f += rng.uniform(-NOISE_HALF_WIDTH, NOISE_HALF_WIDTH, size=t.shape)
    return t, f


def write_csv(path, t, f):
    lines = ["time_s,force_N"]
    lines += ["%.9g,%.9g" % pair for pair in zip(t, f)]
    path.write_text("\n".join(lines) + "\n")


def check(direction, paths, recipe):
    traces = [read_force_csv(p, direction=direction) for p in paths]
    report = build_report(traces)
    targets = {
        "intake": (recipe["intake_duration"], recipe["intake_impulse"]),
        "jet": (recipe["jet_duration"], recipe["jet_impulse"]),
        "rebound": (recipe["rebound_duration"] + 0.010,
                    recipe["rebound_impulse"]),
    }
    print(f"{direction.value}: peak {report.peak_force:.3f} N at "
          f"t={report.peak_time:+.3f} s")
    for name, (want_dur, want_imp) in targets.items():
        phase = report.phases[name]
        print(f"  {name:8s} duration {phase.duration * 1e3:7.1f} ms "
              f"(target {want_dur * 1e3:5.0f})  impulse "
              f"{phase.impulse:+.4f} N s (target {want_imp:+.3f})")
        assert abs(phase.duration - want_dur) < 8e-3, \
            f"{direction.value} {name} duration off target"
        assert abs(phase.impulse - want_imp) < 0.01, \
            f"{direction.value} {name} impulse off target"
    print(f"  total impulse {report.total_impulse:+.4f} N s")
    assert 0.021 < report.total_impulse < 0.029, "net impulse out of band"
    mean_peak = sum(recipe["peaks"]) / len(recipe["peaks"])
    assert abs(report.peak_force - mean_peak) < 0.05, "mean peak drifted"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    default_out = Path(__file__).resolve().parents[1] \
        / "src" / "snapjet" / "data" / "traces"
    parser.add_argument("--out", type=Path, default=default_out,
                        help="output directory (default: bundled data dir)")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for direction, recipe in ((StrokeDirection.DOWNSTROKE, DOWN),
                              (StrokeDirection.UPSTROKE, UP)):
        rng = np.random.default_rng(recipe["seed"])
        paths = []
        for trial, (peak, t_peak) in enumerate(
                zip(recipe["peaks"], PEAK_TIMES), start=1):
            t, f = build_trial(recipe, peak, t_peak, rng)
            path = args.out / f"{direction.value}_trial{trial}.csv"
            write_csv(path, t, f)
            paths.append(path)
        check(direction, paths, recipe)
    print(f"wrote 6 traces to {args.out}")


if __name__ == "__main__":
    main()

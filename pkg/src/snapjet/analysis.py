"""Force-trace reduction: trial alignment, phase segmentation, impulses.

Mirrors the bench protocol used to characterise single strokes on a
load cell.  Repeated trials are time-shifted so their first contraction
peak sits at t = 0, cropped to the overlapping window and averaged with
a two-standard-deviation band.  The averaged stroke is then cut into
three phases by zero crossings around the peak:

    intake   water drawn in before the jet (activation onset to the
             last upward zero crossing before the peak),
    jet      the ejection pulse (between the zero crossings framing
             the peak),
    rebound  post-pulse ringing until the force settles inside the
             noise floor for a hold window.

The activation onset is the first sample above the noise floor (three
standard deviations of the leading quiet window by default); phase
boundaries are reported at sample resolution.  Impulses are trapezoids
over the phase windows, sharing their boundary samples, so the phase
impulses add up to the whole-window impulse to floating-point
exactness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .params import StrokeDirection


class TraceError(ValueError):
    """Malformed or degenerate force trace."""


@dataclass(frozen=True)
class ForceTrace:
    """Uniformly sampled force record of one trial."""

    times: np.ndarray             # s
    forces: np.ndarray            # N, + along the thrust axis
    direction: StrokeDirection | None = None
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.forces, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "forces", f)
        if t.ndim != 1 or t.shape != f.shape:
            raise TraceError(f"{self.label or 'trace'}: times/forces must be "
                             "1-d arrays of equal length")
        if len(t) < 3:
            raise TraceError(f"{self.label or 'trace'}: too few samples")
        steps = np.diff(t)
        if (steps <= 0).any():
            raise TraceError(f"{self.label or 'trace'}: times must increase")
        jitter = (steps.max() - steps.min()) / steps.mean()
        if jitter > 0.01:
            raise TraceError(f"{self.label or 'trace'}: sampling must be "
                             f"uniform within 1% (jitter {jitter:.3%})")

    @property
    def sample_interval(self) -> float:
        return float(np.mean(np.diff(self.times)))

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.sample_interval


@dataclass(frozen=True)
class PhaseBoundaries:
    """Segmentation instants (absolute trace time) and sample indices."""

    onset_time: float             # activation onset
    jet_start_time: float         # last upward zero crossing before peak
    jet_end_time: float           # first downward zero crossing after peak
    quiet_time: float             # force settled inside the noise floor
    onset_index: int
    jet_start_index: int
    jet_end_index: int
    quiet_index: int
    peak_index: int
    noise_floor: float


@dataclass(frozen=True)
class PhaseSummary:
    start: float
    end: float
    duration: float
    impulse: float


@dataclass(frozen=True)
class StrokeReport:
    """Reduced description of one (averaged) stroke."""

    trial_count: int
    direction: StrokeDirection | None
    peak_force: float
    peak_time: float
    phases: dict[str, PhaseSummary]
    total_impulse: float          # sum of the phase impulses, exactly
    boundaries: PhaseBoundaries
    times: np.ndarray
    mean_force: np.ndarray
    band_2sigma: np.ndarray


PHASE_NAMES = ("intake", "jet", "rebound")


# ---------------------------------------------------------------------------
# trial synchronization
# ---------------------------------------------------------------------------

def _first_peak_index(forces: np.ndarray, prominence: float | None) -> int:
    """Index of the first contraction peak above the prominence gate."""
    if prominence is None:
        spread = float(forces.max() - forces.min())
        prominence = 0.5 * spread
    if prominence <= 0.0:
        raise TraceError("trace has no dynamic range to find a peak in")
    peaks, _ = find_peaks(forces, prominence=prominence)
    if len(peaks) == 0:
        raise TraceError("no contraction peak above the prominence threshold")
    return int(peaks[0])


def synchronize_trials(traces: list[ForceTrace],
                       prominence: float | None = None) -> list[ForceTrace]:
    """Shift every trial so its first contraction peak sits at t = 0.

    All trials are cropped to their overlapping time window and
    resampled onto the first trial's (shifted) grid, so the returned
    traces share identical time axes.  Trials already aligned pass
    through unchanged (synchronization is idempotent).
    """
    if not traces:
        raise TraceError("no traces to synchronize")
    rates = [t.sample_rate for t in traces]
    if max(rates) / min(rates) - 1.0 > 0.01:
        raise TraceError("trials must share a sample rate (within 1%)")

    shifted_times = []
    for trace in traces:
        ip = _first_peak_index(trace.forces, prominence)
        shifted_times.append(trace.times - trace.times[ip])

    lo = max(t[0] for t in shifted_times)
    hi = min(t[-1] for t in shifted_times)
    if hi <= lo:
        raise TraceError("trials share no overlapping window after alignment")

    base = shifted_times[0]
    keep = (base >= lo - 1e-12) & (base <= hi + 1e-12)
    grid = base[keep]

    out = []
    for trace, tsh in zip(traces, shifted_times):
        if len(tsh) == len(grid) and np.allclose(tsh, grid, rtol=0, atol=1e-12):
            values = trace.forces.copy()
        else:
            values = np.interp(grid, tsh, trace.forces)
        out.append(ForceTrace(times=grid.copy(), forces=values,
                              direction=trace.direction, label=trace.label))
    return out


# ---------------------------------------------------------------------------
# segmentation
# ---------------------------------------------------------------------------

def segment_phases(trace: ForceTrace, noise_window: float = 0.05,
                   noise_multiplier: float = 3.0,
                   hold_time: float = 0.01,
                   prominence: float | None = None) -> PhaseBoundaries:
    """Locate the intake/jet/rebound boundaries around the first peak.

    The noise floor is noise_multiplier times the standard deviation of
    the leading noise_window seconds.  The rebound ends at the close of
    the first hold_time window in which the force never leaves the
    noise floor; a trace that goes quiet immediately therefore reports
    a rebound exactly one hold window long.
    """
    t = trace.times
    f = trace.forces
    dt = trace.sample_interval
    ip = _first_peak_index(f, prominence)
    if f[ip] <= 0.0:
        raise TraceError("contraction peak must be positive")

    n_noise = max(int(round(noise_window / dt)), 1)
    floor = noise_multiplier * float(np.std(f[:n_noise]))

    # last upward zero crossing before the peak
    i1 = None
    for i in range(ip, 0, -1):
        if f[i] > 0.0 and f[i - 1] <= 0.0:
            i1 = i - 1 if f[i - 1] == 0.0 else i
            break
    if i1 is None:
        i1 = 0

    # first downward zero crossing after the peak
    i2 = None
    for i in range(ip + 1, len(f)):
        if f[i] <= 0.0 and f[i - 1] > 0.0:
            i2 = i
            break
    if i2 is None:
        raise TraceError("force never returns to zero after the peak")

    # activation onset: first sample above the floor before the jet
    i0 = None
    for i in range(0, i1):
        if abs(f[i]) > floor:
            i0 = i
            break
    if i0 is None:
        i0 = 0

    # rebound end: close of the first hold window fully inside the floor
    hold_n = max(int(round(hold_time / dt)), 1)   # intervals, not samples
    i3 = len(f) - 1
    for j in range(i2, len(f) - hold_n):
        segment = f[j:j + hold_n + 1]
        if np.all(np.abs(segment) <= floor):
            i3 = j + hold_n
            break

    return PhaseBoundaries(
        onset_time=float(t[i0]), jet_start_time=float(t[i1]),
        jet_end_time=float(t[i2]), quiet_time=float(t[i3]),
        onset_index=i0, jet_start_index=i1, jet_end_index=i2, quiet_index=i3,
        peak_index=ip, noise_floor=floor,
    )


# ---------------------------------------------------------------------------
# impulses
# ---------------------------------------------------------------------------

def integrate_impulse(trace: ForceTrace, window: tuple[float, float]) -> float:
    """Trapezoidal impulse over a time window snapped to samples.

    Windows sharing a boundary sample partition exactly: the impulses
    over [a, b] and [b, c] sum to the impulse over [a, c] up to
    floating-point rounding of the identical interval areas.
    """
    t_lo, t_hi = window
    if t_hi <= t_lo:
        raise ValueError("impulse window is empty")
    t = trace.times
    if t_lo < t[0] - 1e-12 or t_hi > t[-1] + 1e-12:
        raise ValueError("impulse window must lie within the trace support")
    i_lo = int(np.argmin(np.abs(t - t_lo)))
    i_hi = int(np.argmin(np.abs(t - t_hi)))
    if i_hi <= i_lo:
        raise ValueError("impulse window shorter than one sample interval")
    f = trace.forces
    areas = 0.5 * (f[i_lo:i_hi] + f[i_lo + 1:i_hi + 1]) \
        * (t[i_lo + 1:i_hi + 1] - t[i_lo:i_hi])
    return math.fsum(areas.tolist())


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def build_report(traces: list[ForceTrace],
                 direction: StrokeDirection | None = None,
                 synchronize: bool = True,
                 noise_window: float = 0.05,
                 noise_multiplier: float = 3.0,
                 hold_time: float = 0.01,
                 prominence: float | None = None) -> StrokeReport:
    """Synchronize, average and segment a set of trials into one report."""
    if not traces:
        raise TraceError("no traces to report on")
    if direction is None:
        labels = {t.direction for t in traces if t.direction is not None}
        direction = labels.pop() if len(labels) == 1 else None
    if synchronize:
        traces = synchronize_trials(traces, prominence=prominence)

    stack = np.vstack([t.forces for t in traces])
    mean = stack.mean(axis=0)
    if len(traces) > 1:
        band = 2.0 * stack.std(axis=0, ddof=1)
    else:
        band = np.zeros_like(mean)

    averaged = ForceTrace(times=traces[0].times, forces=mean,
                          direction=direction, label="mean")
    bounds = segment_phases(averaged, noise_window=noise_window,
                            noise_multiplier=noise_multiplier,
                            hold_time=hold_time, prominence=prominence)

    windows = {
        "intake": (bounds.onset_index, bounds.jet_start_index),
        "jet": (bounds.jet_start_index, bounds.jet_end_index),
        "rebound": (bounds.jet_end_index, bounds.quiet_index),
    }
    phases: dict[str, PhaseSummary] = {}
    t = averaged.times
    for name, (i_a, i_b) in windows.items():
        if i_b > i_a:
            impulse = integrate_impulse(averaged, (t[i_a], t[i_b]))
        else:  # zero-length phase (e.g. onset coincides with the jet start)
            impulse = 0.0
        phases[name] = PhaseSummary(
            start=float(t[i_a]), end=float(t[i_b]),
            duration=float(t[i_b] - t[i_a]), impulse=impulse,
        )
    total = math.fsum(p.impulse for p in phases.values())

    ip = bounds.peak_index
    return StrokeReport(
        trial_count=len(traces), direction=direction,
        peak_force=float(mean[ip]), peak_time=float(t[ip]),
        phases=phases, total_impulse=total, boundaries=bounds,
        times=t, mean_force=mean, band_2sigma=band,
    )


def report_to_dict(report: StrokeReport, include_band: bool = True) -> dict:
    doc = {
        "trial_count": report.trial_count,
        "direction": report.direction.value if report.direction else None,
        "peak_force_N": report.peak_force,
        "peak_time_s": report.peak_time,
        "noise_floor_N": report.boundaries.noise_floor,
        "phases": {
            name: {
                "start_s": p.start,
                "end_s": p.end,
                "duration_s": p.duration,
                "impulse_Ns": p.impulse,
            } for name, p in report.phases.items()
        },
        "total_impulse_Ns": report.total_impulse,
    }
    if include_band:
        doc["time_s"] = [float(v) for v in report.times]
        doc["mean_force_N"] = [float(v) for v in report.mean_force]
        doc["band_2sigma_N"] = [float(v) for v in report.band_2sigma]
    return doc


def write_report_json(report: StrokeReport, path: str | Path,
                      include_band: bool = True) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report, include_band),
                                     indent=2) + "\n")


def write_band_csv(report: StrokeReport, path: str | Path) -> None:
    """Per-sample mean force with the 2-sigma band, 9 significant digits."""
    lines = ["time_s,mean_force_N,band_2sigma_N"]
    for t, m, b in zip(report.times, report.mean_force, report.band_2sigma):
        lines.append("%.9g,%.9g,%.9g" % (t, m, b))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def read_force_csv(path: str | Path,
                   direction: StrokeDirection | None = None) -> ForceTrace:
    """Load a force trace from CSV.

    Accepts the two-column (time_s, force_N) bench format, with or
    without a header line, and full simulator traces (the thrust_N
    column is taken as the force).
    """
    p = Path(path)
    text = p.read_text().strip()
    if not text:
        raise TraceError(f"{p}: empty file")
    lines = text.splitlines()
    first = lines[0].split(",")
    start = 0
    t_col, f_col = 0, 1
    try:
        float(first[0])
    except ValueError:
        start = 1
        header = [h.strip() for h in first]
        if "thrust_N" in header:
            t_col = header.index("time_s")
            f_col = header.index("thrust_N")
        elif len(header) < 2:
            raise TraceError(f"{p}: need at least two columns")
    times, forces = [], []
    for ln, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            times.append(float(parts[t_col]))
            forces.append(float(parts[f_col]))
        except (ValueError, IndexError) as exc:
            raise TraceError(f"{p}: bad row at line {ln}: {line!r}") from exc
    return ForceTrace(times=np.array(times), forces=np.array(forces),
                      direction=direction, label=p.name)

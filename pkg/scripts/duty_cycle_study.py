#!/usr/bin/env python
"""Map average swim speed against the coil heating time.

Sweeps power.on_duration over the feasible band with everything else at
the defaults and prints one row per setting: did the engine snap, how
fast the body swam, and what the electrical energy bought per metre.
The interesting result is that the optimum is interior: heat too
briefly and the coil never reaches the transformation band, heat too
long and the extra watt-seconds buy nothing but a longer wait between
strokes.  Writes the table as CSV next to the printout if asked.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from snapjet.optimize import sweep_metrics
from snapjet.params import DEFAULTS

COLUMNS = ("avg_speed_mps", "peak_speed_mps", "snap_count",
           "energy_per_distance_Jpm")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lo", type=float, default=1.2,
                        help="shortest heating time, s (default 1.2)")
    parser.add_argument("--hi", type=float, default=4.8,
                        help="longest heating time, s (default 4.8)")
    parser.add_argument("--steps", type=int, default=25,
                        help="number of settings (default 25)")
    parser.add_argument("--cycles", type=int, default=3,
                        help="strokes simulated per setting (default 3)")
    parser.add_argument("--csv", type=Path, default=None,
                        help="also write the table to this file")
    args = parser.parse_args()
    if not 0.0 < args.lo < args.hi:
        sys.exit("need 0 < --lo < --hi")

    values = np.linspace(args.lo, args.hi, args.steps)
    rows = sweep_metrics(DEFAULTS, "power.on_duration", values,
                         horizon_cycles=args.cycles)

    print("on_s   snaps  avg_mm/s  peak_mm/s  J/m")
    for row in rows:
        if row.get("snap_count", 0.0) < 1.0:
            print(f"{row['value']:5.2f}   none  (engine never snapped)")
            continue
        print(f"{row['value']:5.2f}   {row['snap_count']:4.0f}  "
              f"{1e3 * row['avg_speed_mps']:8.3f}  "
              f"{1e3 * row['peak_speed_mps']:9.2f}  "
              f"{row['energy_per_distance_Jpm']:7.1f}")

    swum = [row for row in rows if row.get("snap_count", 0.0) >= 1.0]
    if not swum:
        sys.exit("no setting in the band produced a stroke")
    best = max(swum, key=lambda row: row["avg_speed_mps"])
    interior = values[0] < best["value"] < values[-1]
    print(f"\nfastest: on_duration = {best['value']:.3f} s at "
          f"{1e3 * best['avg_speed_mps']:.3f} mm/s "
          f"({'interior' if interior else 'AT THE SWEEP EDGE'})")

    if args.csv is not None:
        keys = ("value",) + COLUMNS
        lines = [",".join(("on_duration_s",) + COLUMNS)]
        for row in rows:
            lines.append(",".join("%.9g" % row.get(k, float("nan"))
                                  for k in keys))
        args.csv.write_text("\n".join(lines) + "\n")
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()

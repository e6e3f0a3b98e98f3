#!/usr/bin/env python
"""Fit the plant model to a measured-targets file and report residuals.

Runs the bounded calibration described by a targets document (default:
the bundled bench measurements), prints the fitted parameter overlay
and the per-target residual table, and optionally writes the fitted
configuration back out as a complete TOML file.  A reduced budget via
--budget makes for a quick smoke run; the bundled [fit] section is
sized so the full fit lands every residual well inside +-25%.
"""

import argparse
import sys
from pathlib import Path

from snapjet.calibrate import calibrate, load_targets_file, \
    write_fitted_config
from snapjet.params import DEFAULTS

BUNDLED = Path(__file__).resolve().parents[1] \
    / "src" / "snapjet" / "data" / "targets_measured.toml"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--targets", type=Path, default=BUNDLED,
                        help="targets document (default: bundled bench set)")
    parser.add_argument("--budget", type=int, default=None,
                        help="override the file's evaluation budget")
    parser.add_argument("--fitted", type=Path, default=None,
                        help="write the fitted configuration here")
    args = parser.parse_args()

    targets, free, start, fit = load_targets_file(args.targets)
    if args.budget is not None:
        fit["budget"] = args.budget
    print(f"{len(targets.values)} targets, {len(free)} free parameters, "
          f"budget {fit.get('budget', 400)}")

    result = calibrate(DEFAULTS, targets, free, start=start, **fit)
    if not result.feasible:
        sys.exit("calibration infeasible: no evaluated design snapped")

    print("\nfitted overlay:")
    for path, value in sorted(result.overlay.items()):
        print(f"  {path:32s} = {value:.6g}")
    print("\nresiduals (simulated vs target):")
    for row in result.residuals:
        print(f"  {row.name:20s} {row.simulated:10.4f} vs "
              f"{row.target:8.4f}  -> {row.residual:+7.2%}")
    print(f"\n{result.evaluations} evaluations, "
          f"max residual {result.max_abs_residual:.2%}")

    if args.fitted is not None:
        write_fitted_config(DEFAULTS, result, args.fitted)
        print(f"wrote {args.fitted}")


if __name__ == "__main__":
    main()

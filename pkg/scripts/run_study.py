#!/usr/bin/env python3
"""Run the finite-sample study end to end and drop CSVs under results/.

Desk scale by default; --scale full switches to the full-scale configs
(n = 10^4, study replication counts) and takes correspondingly longer.
"""

import argparse
import pathlib
import sys
import time

from xustat import harness

DESK = [
    "mse_gp05.cfg",
    "variance_table.cfg",
    "bias_burr.cfg",
    "trajectory_student_t4.cfg",
    "bootstrap_coverage.cfg",
]
FULL = [
    "full_scale/mse_gp05.cfg",
    "full_scale/variance_table.cfg",
    "full_scale/bias_burr.cfg",
    "full_scale/trajectory_student_t4.cfg",
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", choices=("desk", "full"), default="desk")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument(
        "--configs",
        default=None,
        help="comma list of config names to run (default: all for the scale)",
    )
    args = parser.parse_args()

    root = pathlib.Path(__file__).resolve().parent.parent
    names = DESK if args.scale == "desk" else FULL
    if args.configs:
        names = [c.strip() for c in args.configs.split(",")]

    for name in names:
        config = harness.load_config(str(root / "configs" / name))
        if args.threads is not None:
            from dataclasses import replace

            config = replace(config, threads=args.threads)
        t0 = time.time()
        path = harness.run_to_csv(config)
        print(f"{name}: wrote {path} in {time.time() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

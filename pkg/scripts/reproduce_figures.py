#!/usr/bin/env python3
"""Run every figure-style experiment and leave the CSVs in one directory.

    python scripts/reproduce_figures.py --out results
    python scripts/reproduce_figures.py --out results/quick --quick

``--quick`` caps every Monte Carlo sweep at a handful of trials, which is
enough to check the plumbing but not the curve orderings.
"""

from __future__ import annotations

import argparse
import sys
import time

from tflotfs.experiments import cli

QUICK = ["--override", "min_trials=10", "--override", "max_trials=10", "--override", "batch=10"]

STEPS = [
    ["pulse-dump"],
    ["dd-spread"],
    ["ber-snr"],           # BER and NMSE records for perfect and estimated CSI
    ["ber-speed"],
    ["ber-to", "--channel", "both"],
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--quick", action="store_true", help="10 trials per sweep")
    args = ap.parse_args(argv)

    status = 0
    for step in STEPS:
        argv_ = step + ["--out", args.out, "--seed", str(args.seed)]
        if args.workers:
            argv_ += ["--workers", str(args.workers)]
        if args.quick and step[0].startswith("ber"):
            argv_ += QUICK
        t0 = time.perf_counter()
        code = cli.main(argv_)
        print(f"[{step[0]}] exit {code} after {time.perf_counter() - t0:.0f} s")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())

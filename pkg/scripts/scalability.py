#!/usr/bin/env python3
"""Build/solve time against state count, enlarging the dismiss offset.

The two-point task on the three-phase supply has 2*delta + 3 states, so the
state count is controlled directly.  Writes CSV to stdout or --out.
"""

import argparse
import csv
import sys
import time

from dmrkit import scenarios
from dmrkit.analysis import compute_dmr
from dmrkit.chain import build_chain


def main() -> None:
    ap = argparse.ArgumentParser(description="runtime vs. state count")
    ap.add_argument("--deltas", type=int, nargs="+", default=[1000, 2000, 3000, 4000, 5000])
    ap.add_argument("--method", default="gth", choices=["gth", "power", "auto"])
    ap.add_argument("--out")
    args = ap.parse_args()

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["dismiss_offset", "n_states", "build_s", "solve_s", "dmr_float"])
    supply = scenarios.fp_three_phase()
    for delta in args.deltas:
        t0 = time.perf_counter()
        chain = build_chain(scenarios.two_point_task(dismiss_offset=delta), supply)
        t1 = time.perf_counter()
        result = compute_dmr(chain, method=args.method)
        t2 = time.perf_counter()
        w.writerow([delta, len(chain), f"{t1 - t0:.3f}", f"{t2 - t1:.3f}", f"{result.dmr_float:.9f}"])
        fh.flush()
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Distribution of DMR_N for growing N, next to the long-run DMR.

Prints N, E[DMR_N], its gap to the DMR, and P(|DMR_N - DMR| > eps) so the
concentration around the limit can be plotted.
"""

import argparse
from fractions import Fraction

from dmrkit import scenarios
from dmrkit.analysis import compute_dmr
from dmrkit.chain import build_chain
from dmrkit.sim import dmr_n_from_chain


def main() -> None:
    ap = argparse.ArgumentParser(description="DMR_N convergence")
    ap.add_argument("--ns", type=int, nargs="+", default=[3, 10, 30, 100, 300])
    ap.add_argument("--deadline", default="6")
    ap.add_argument("--dismiss-offset", default="0")
    ap.add_argument("--eps", default="1/20")
    args = ap.parse_args()

    task = scenarios.two_point_task(deadline=Fraction(args.deadline), dismiss_offset=Fraction(args.dismiss_offset))
    chain = build_chain(task, scenarios.fp_three_phase())
    dmr = compute_dmr(chain).dmr
    eps = Fraction(args.eps)
    print(f"long-run DMR = {dmr} (~{float(dmr):.6f})")
    print("N,mean,gap,tail_prob")
    for n in args.ns:
        dist = dmr_n_from_chain(chain, n)
        mean = dist.mean()
        tail = sum((p for v, p in dist.points if abs(v - dmr) > eps), Fraction(0))
        print(f"{n},{float(mean):.8f},{float(mean - dmr):.3e},{float(tail):.6f}")


if __name__ == "__main__":
    main()

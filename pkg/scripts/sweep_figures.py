#!/usr/bin/env python3
"""Run the bundled parameter sweeps and write one CSV per sweep.

    python3 scripts/sweep_figures.py --out results/ --jobs 2
"""

import argparse
from pathlib import Path

from dmrkit.sweep import load_sweep, rows_to_csv, run_sweep

DATA = Path(__file__).resolve().parents[1] / "data"
SWEEPS = ["sweep_p", "sweep_dismiss", "sweep_deadline", "sweep_deadline_bounds"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in SWEEPS:
        spec = load_sweep(DATA / f"{name}.json")
        rows = run_sweep(spec, workers=args.jobs, timing=args.timing)
        (args.out / f"{name}.csv").write_text(rows_to_csv(rows))
        tail = rows[-1]
        print(f"{name:24s} {len(rows):3d} rows, last {spec.axis}={tail['axis_value']}: {tail['dmr_float']}")


if __name__ == "__main__":
    main()

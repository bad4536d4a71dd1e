"""Run the benchmark suites and write one CSV per suite.

Example::

    python scripts/reproduce_tables.py --images ~/images --out results/
    python scripts/reproduce_tables.py --suites table3 table4 --scale full
"""

import argparse
import logging
from pathlib import Path

from tvam.harness import SUITES, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suites", nargs="+", choices=SUITES, default=list(SUITES))
    ap.add_argument("--scale", choices=("desk", "full"), default="desk")
    ap.add_argument("--images", type=Path, default=None, help="directory of P5/P6 test images")
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--reps", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    for suite in args.suites:
        path = args.out / f"{suite}_{args.scale}.csv"
        res = run_suite(suite, args.scale, path, args.images, args.seed, args.reps)
        print(f"== {suite} ({len(res.rows)} rows) -> {path}")
        for row in res.rows:
            print(f"  {row.case:18s} {row.solver:5s} {row.metric}={row.value:.4g} "
                  f"+-{row.value_std:.2g} iters={row.iterations:g} time={row.time_s:.3f}s")
        for note in res.notes:
            print(f"  skipped: {note}")


if __name__ == "__main__":
    main()

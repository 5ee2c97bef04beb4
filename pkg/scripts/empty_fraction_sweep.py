#!/usr/bin/env python3
"""Sweep the overload factor and record the empty-slot fraction.

Reproduces the headline trend: as epsilon walks from mild (-0.01) to
strong (-0.12) overload, the share of unfilled slots collapses toward a
minimum region, beyond which over-eager bumping brings it back up.

    python3 scripts/empty_fraction_sweep.py --n 1000000 --seeds 3 \
        --out measurements/empty_fraction_sweep.csv
"""

import argparse
import os
import sys

from ribbon.bench import CSV_COLUMNS, sweep
from ribbon.bumped import ThresholdMode


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--w", type=int, default=64)
    ap.add_argument("--r", type=int, default=8)
    ap.add_argument("--mode", choices=["plain", "2bit", "1+bit"], default="2bit")
    ap.add_argument("--bucket-bits", type=int, default=7)
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--eps-from", type=float, default=-0.12)
    ap.add_argument("--eps-to", type=float, default=-0.01)
    ap.add_argument("--eps-step", type=float, default=0.005)
    ap.add_argument("--out", default="measurements/empty_fraction_sweep.csv")
    args = ap.parse_args()

    reports = sweep(
        kind="burr",
        w=args.w,
        r=args.r,
        mode=ThresholdMode(args.mode),
        bucket_size=1 << args.bucket_bits,
        eps_from=args.eps_from,
        eps_to=args.eps_to,
        eps_step=args.eps_step,
        n=args.n,
        num_seeds=args.seeds,
        queries=0,
        negatives=0,
    )
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")
    print(f"wrote {args.out} ({len(reports)} rows)")

    by_eps = {}
    for rep in reports:
        by_eps.setdefault(rep.epsilon, []).append(rep.empty_frac)
    print(f"{'epsilon':>9}  {'empty_frac (mean over seeds)':>28}")
    for eps in sorted(by_eps, reverse=True):
        vals = by_eps[eps]
        print(f"{eps:>9.3f}  {sum(vals) / len(vals):>28.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Space overhead table across band widths and threshold encodings.

Builds the tuned default configuration for each (width, mode) cell at the
requested scale and prints overhead, empty-slot fraction, metadata cost,
and construction throughput.

    python3 scripts/space_table.py --n 1000000
"""

import argparse
import sys

from ribbon.bench import build_structure
from ribbon.bumped import ThresholdMode


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--r", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--widths", type=int, nargs="+", default=[16, 32, 64, 128])
    args = ap.parse_args()

    header = (
        f"{'w':>4} {'mode':>6} {'b':>5} {'epsilon':>9} {'overhead%':>10} "
        f"{'empty%':>8} {'meta b/bkt':>10} {'Mkeys/s':>8}"
    )
    print(header)
    print("-" * len(header))
    for w in args.widths:
        for mode in ThresholdMode:
            _, rep = build_structure(
                "burr", n=args.n, w=w, r=args.r, mode=mode, seed=args.seed
            )
            rate = 1000.0 / rep.construct_ns_per_key
            print(
                f"{w:>4} {rep.mode:>6} {rep.bucket_size:>5} {rep.epsilon:>9.5f} "
                f"{rep.overhead * 100:>10.4f} {rep.empty_frac * 100:>8.4f} "
                f"{rep.meta_bits_per_bucket:>10.3f} {rate:>8.2f}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line benchmark driver (installed as ``ribbon-bench``).

Subcommands:
  build        construct one structure and print a space report (optionally save it)
  query-bench  reload or rebuild a structure and time query workloads
  fp-rate      measure the false-positive rate against fresh negatives
  sweep        grid of builds over an epsilon range, CSV out

The RIBBON_SEED environment variable overrides --seed everywhere, so a
whole pipeline can be re-seeded without touching scripts.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import bench
from .bumped import ThresholdMode
from .errors import RibbonError
from .serialize import load_structure, save_structure

_MODES = {
    "plain": ThresholdMode.PLAIN,
    "2bit": ThresholdMode.TWO_BIT,
    "1+bit": ThresholdMode.ONE_PLUS_BIT,
}


def _add_common(p: argparse.ArgumentParser, *, with_build: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed (RIBBON_SEED overrides)")
    if with_build:
        p.add_argument("--kind", choices=["standard", "homog", "burr"], default="burr")
        p.add_argument("--w", type=int, default=64, help="ribbon width")
        p.add_argument("--r", type=int, default=8, help="result bits per key")
        p.add_argument("--epsilon", type=float, default=None, help="slot surplus (sign matters)")
        p.add_argument("--mode", choices=sorted(_MODES), default="2bit", help="threshold encoding")
        p.add_argument("--bucket-bits", type=int, default=None, help="log2 of the bucket size")
        p.add_argument("--n", type=int, default=1_000_000, help="number of synthetic keys")
        p.add_argument("--key-file", default=None, help="newline-delimited keys instead of synthetic")
        p.add_argument("--layout", choices=["interleaved", "contiguous"], default="interleaved")


def _resolve_seed(args) -> int:
    env = os.environ.get("RIBBON_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise SystemExit(f"ribbon-bench: bad RIBBON_SEED {env!r}")
    return args.seed


def _load_keys(path: str, seed: int) -> np.ndarray:
    with open(path, "rb") as f:
        lines = [ln for ln in f.read().splitlines() if ln]
    return bench.mhcs_for_byte_keys(lines, seed)


def _build_from_args(args, seed: int):
    mhcs = None
    if args.key_file:
        mhcs = _load_keys(args.key_file, seed)
    bucket_size = None if args.bucket_bits is None else 1 << args.bucket_bits
    return bench.build_structure(
        args.kind,
        n=args.n,
        mhcs=mhcs,
        w=args.w,
        r=args.r,
        epsilon=args.epsilon,
        mode=_MODES[args.mode],
        bucket_size=bucket_size,
        seed=seed,
        layout=args.layout,
    )


def _print_report(report: bench.BenchReport) -> None:
    print(bench.CSV_COLUMNS)
    print(report.csv_row())


def cmd_build(args) -> int:
    seed = _resolve_seed(args)
    structure, report = _build_from_args(args, seed)
    _print_report(report)
    if args.kind == "burr":
        sp = structure.space_report()
        print(f"# total_bits={sp.total_bits} bits_per_key={sp.bits_per_key:.4f}", file=sys.stderr)
        for layer in sp.layers:
            print(
                f"# layer {layer.layer_index}: keys={layer.n_keys} slots={layer.slots}"
                f" empty={layer.empty_slots} exceptions={layer.exceptions}",
                file=sys.stderr,
            )
        print(
            f"# final: keys={sp.final_keys} slots={sp.final_slots} bits={sp.final_solution_bits}",
            file=sys.stderr,
        )
    if args.out:
        save_structure(
            args.out,
            structure,
            seed=seed,
            n=report.n,
            fingerprint_mode=True,
            external_keys=args.key_file is not None,
        )
        print(f"# saved {args.out} ({os.path.getsize(args.out)} bytes)", file=sys.stderr)
    return 0


def cmd_query_bench(args) -> int:
    seed = _resolve_seed(args)
    if args.structure:
        stored = load_structure(args.structure)
        structure, seed, n = stored.structure, stored.seed, stored.n
        kind = stored.kind
        if stored.external_keys:
            raise SystemExit("ribbon-bench: stored structure was built from a key file; "
                             "synthetic workloads would be meaningless")
    else:
        structure, report = _build_from_args(args, seed)
        n, kind = report.n, args.kind
    count = args.queries
    rows = []
    for mix in ("pos", "neg", "mixed50"):
        mhcs = bench.query_workload(structure, kind, seed, n, count, mix)
        ns, results = bench.time_queries(
            structure, mhcs, as_filter=args.as_filter, reps=args.reps, threads=args.threads
        )
        rows.append((mix, ns, results))
    print("mix,ns_per_key,queries,threads")
    for mix, ns, _ in rows:
        print(f"{mix},{ns:.1f},{count},{args.threads}")
    if args.as_filter:
        pos_hits = rows[0][2]
        if not bool(np.all(pos_hits)):
            print("# WARNING: false negatives on stored keys", file=sys.stderr)
            return 1
    return 0


def cmd_fp_rate(args) -> int:
    seed = _resolve_seed(args)
    if args.structure:
        stored = load_structure(args.structure)
        structure, seed, n = stored.structure, stored.seed, stored.n
    else:
        structure, report = _build_from_args(args, seed)
        n = report.n
    rate = bench.measure_fp_rate(structure, seed, n, args.negatives)
    expected = 2.0 ** -structure.r if hasattr(structure, "r") else math.nan
    print("fp_rate,expected,negatives")
    print(f"{rate:.8f},{expected:.8f},{args.negatives}")
    return 0


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    bucket_size = None if args.bucket_bits is None else 1 << args.bucket_bits
    reports = bench.sweep(
        kind=args.kind,
        w=args.w,
        r=args.r,
        mode=_MODES[args.mode],
        bucket_size=bucket_size,
        eps_from=args.epsilon_from,
        eps_to=args.epsilon_to,
        eps_step=args.epsilon_step,
        n=args.n,
        num_seeds=args.seeds,
        base_seed=seed,
        queries=args.queries,
        negatives=args.negatives,
    )
    lines = [bench.CSV_COLUMNS] + [r.csv_row() for r in reports]
    text = "\n".join(lines) + "\n"
    if args.csv_out:
        with open(args.csv_out, "w") as f:
            f.write(text)
        print(f"# wrote {args.csv_out} ({len(reports)} rows)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ribbon-bench", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a structure, print space metrics")
    _add_common(p)
    p.add_argument("--out", default=None, help="write the structure to this file")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query-bench", help="time query workloads")
    _add_common(p)
    p.add_argument("--structure", default=None, help="load a saved structure instead of building")
    p.add_argument("--queries", type=int, default=1_000_000)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--as-filter", action="store_true", help="time membership instead of retrieval")
    p.set_defaults(func=cmd_query_bench)

    p = sub.add_parser("fp-rate", help="measure the false-positive rate")
    _add_common(p)
    p.add_argument("--structure", default=None, help="load a saved structure instead of building")
    p.add_argument("--negatives", type=int, default=1_000_000)
    p.set_defaults(func=cmd_fp_rate)

    p = sub.add_parser("sweep", help="epsilon grid, CSV out")
    _add_common(p)
    p.add_argument("--epsilon-from", type=float, required=True)
    p.add_argument("--epsilon-to", type=float, required=True)
    p.add_argument("--epsilon-step", type=float, required=True)
    p.add_argument("--seeds", type=int, default=3, help="builds per epsilon")
    p.add_argument("--queries", type=int, default=100_000)
    p.add_argument("--negatives", type=int, default=100_000)
    p.add_argument("--csv-out", default=None)
    p.set_defaults(func=cmd_sweep)

    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RibbonError, OSError, ValueError) as exc:
        print(f"ribbon-bench: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

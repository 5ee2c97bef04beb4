"""Benchmark plumbing: key generation, builders, timing, CSV reporting.

Synthetic keys come from a seeded counter generator, so any slice of the
key stream can be regenerated from (seed, offset) alone: offsets below n
are the stored keys, offsets at n and above are guaranteed-disjoint
negatives.  Structure files record seed and n, which is all query and
false-positive workloads need.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import hashing
from .bumped import BumpedRibbon, BurrConfig, ThresholdMode, construct_burr, default_params
from .homogeneous import HomogeneousFilter, construct_homogeneous, default_epsilon
from .standard import StandardRibbon, construct_standard

_SM_GAMMA = 0x9E37_79B9_7F4A_7C15
_SM_MULT1 = 0xBF58_476D_1CE4_E5B9
_SM_MULT2 = 0x94D0_49BB_1331_11EB


def synthetic_keys(seed: int, offset: int, count: int) -> np.ndarray:
    """Counter-based 64-bit key stream (splitmix64); injective per seed."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = np.uint64(seed & hashing.MASK64) + idx * np.uint64(_SM_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM_MULT2)
    return z ^ (z >> np.uint64(31))


def synthetic_mhcs(seed: int, offset: int, count: int) -> np.ndarray:
    """MHCs of the synthetic keys, hashed as 8-byte little-endian strings."""
    return hashing.compute_mhc_u64(synthetic_keys(seed, offset, count), seed)


def mhcs_for_byte_keys(keys: list[bytes], seed: int) -> np.ndarray:
    return np.fromiter(
        (hashing.compute_mhc(k, seed) for k in keys), dtype=np.uint64, count=len(keys)
    )


CSV_COLUMNS = (
    "kind,w,r,epsilon,bucket_size,mode,n,empty_frac,meta_bits_per_bucket,overhead,"
    "construct_ns_per_key,pos_ns,neg_ns,mixed_ns,fp_rate,seed,attempts"
)

_MODE_TAGS = {
    ThresholdMode.PLAIN: "plain",
    ThresholdMode.TWO_BIT: "2bit",
    ThresholdMode.ONE_PLUS_BIT: "1+bit",
}


@dataclass
class BenchReport:
    kind: str
    w: int
    r: int
    epsilon: float
    bucket_size: int | None
    mode: str
    n: int
    empty_frac: float
    meta_bits_per_bucket: float
    overhead: float
    construct_ns_per_key: float
    pos_ns: float = math.nan
    neg_ns: float = math.nan
    mixed_ns: float = math.nan
    fp_rate: float = math.nan
    seed: int = 0
    attempts: int = 1

    def csv_row(self) -> str:
        def num(x, fmt="{:.6g}"):
            if x is None:
                return ""
            if isinstance(x, float) and math.isnan(x):
                return ""
            return fmt.format(x)

        return ",".join(
            [
                self.kind,
                str(self.w),
                str(self.r),
                f"{self.epsilon:.6g}",
                "" if self.bucket_size is None else str(self.bucket_size),
                self.mode,
                str(self.n),
                num(self.empty_frac, "{:.8f}"),
                num(self.meta_bits_per_bucket, "{:.6f}"),
                num(self.overhead, "{:.8f}"),
                num(self.construct_ns_per_key, "{:.1f}"),
                num(self.pos_ns, "{:.1f}"),
                num(self.neg_ns, "{:.1f}"),
                num(self.mixed_ns, "{:.1f}"),
                num(self.fp_rate, "{:.8f}"),
                str(self.seed),
                str(self.attempts),
            ]
        )


def build_structure(
    kind: str,
    *,
    n: int | None = None,
    mhcs: np.ndarray | None = None,
    w: int = 64,
    r: int = 8,
    epsilon: float | None = None,
    mode: ThresholdMode = ThresholdMode.TWO_BIT,
    bucket_size: int | None = None,
    seed: int = 0,
    layout: str = "interleaved",
):
    """Build one structure over synthetic or precomputed keys.

    Returns (structure, report) with space metrics and construction time
    filled in; query timing fields stay blank for the caller to add.
    """
    if mhcs is None:
        if n is None:
            raise ValueError("need n or mhcs")
        mhcs = synthetic_mhcs(seed, 0, n)
    n = len(mhcs)
    values = hashing.derive_fingerprint_vec(mhcs, r)

    t0 = time.perf_counter_ns()
    if kind == "standard":
        eps = 0.25 if epsilon is None else epsilon
        structure = construct_standard(
            (mhcs, values), w=w, r=r, epsilon=eps, seed=seed, layout=layout
        )
        occupied = structure.n  # every key consumed a slot or was redundant
        empty_frac = (structure.m - occupied) / structure.m if structure.m else 0.0
        report = BenchReport(
            kind=kind,
            w=w,
            r=r,
            epsilon=eps,
            bucket_size=None,
            mode="",
            n=n,
            empty_frac=empty_frac,
            meta_bits_per_bucket=math.nan,
            overhead=structure.storage_bits() / (n * r) - 1.0 if n else math.nan,
            construct_ns_per_key=math.nan,
            seed=seed,
            attempts=structure.attempts,
        )
    elif kind == "homog":
        eps = default_epsilon(w, r) if epsilon is None else epsilon
        structure = construct_homogeneous(mhcs, w=w, r=r, epsilon=eps, seed=seed)
        occ = structure.n - structure.redundant
        report = BenchReport(
            kind=kind,
            w=w,
            r=r,
            epsilon=eps,
            bucket_size=None,
            mode="",
            n=n,
            empty_frac=(structure.m - occ) / structure.m if structure.m else 0.0,
            meta_bits_per_bucket=math.nan,
            overhead=structure.storage_bits() / (n * r) - 1.0 if n else math.nan,
            construct_ns_per_key=math.nan,
            seed=seed,
            attempts=1,
        )
    elif kind == "burr":
        cfg = default_params(w, mode, r, epsilon=epsilon, bucket_size=bucket_size)
        structure = construct_burr((mhcs, values), cfg, seed)
        sp = structure.space_report()
        report = BenchReport(
            kind=kind,
            w=w,
            r=r,
            epsilon=cfg.epsilon,
            bucket_size=cfg.bucket_size,
            mode=_MODE_TAGS[cfg.mode],
            n=n,
            empty_frac=sp.empty_fraction,
            meta_bits_per_bucket=sp.meta_bits_per_bucket,
            overhead=sp.overhead,
            construct_ns_per_key=math.nan,
            seed=seed,
            attempts=structure.final.attempts,
        )
    else:
        raise ValueError(f"unknown kind {kind!r}")
    elapsed = time.perf_counter_ns() - t0
    report.construct_ns_per_key = elapsed / n if n else math.nan
    return structure, report


def query_workload(structure, kind: str, seed: int, n: int, count: int, mix: str) -> np.ndarray:
    """MHC array for a timing/correctness workload over the stored key set."""
    rng = np.random.default_rng(seed ^ 0xC0FFEE)
    if mix == "pos":
        offsets = rng.integers(0, n, size=count, dtype=np.int64) if n else np.zeros(0, np.int64)
        keys = synthetic_keys(seed, 0, n)[offsets] if n else np.zeros(0, np.uint64)
    elif mix == "neg":
        keys = synthetic_keys(seed, n, count)
    elif mix == "mixed50":
        pos_mask = rng.random(count) < 0.5
        keys = synthetic_keys(seed, n, count)
        if n:
            pos_idx = rng.integers(0, n, size=int(pos_mask.sum()), dtype=np.int64)
            keys[pos_mask] = synthetic_keys(seed, 0, n)[pos_idx]
    else:
        raise ValueError(f"unknown mix {mix!r}")
    return hashing.compute_mhc_u64(keys, seed)


def _run_queries(structure, mhcs: np.ndarray, as_filter: bool) -> np.ndarray:
    if as_filter:
        if isinstance(structure, HomogeneousFilter):
            return structure.contains_many(mhcs)
        if isinstance(structure, BumpedRibbon):
            return structure.contains_many(mhcs)
        return structure.query_many(mhcs) == hashing.derive_fingerprint_vec(mhcs, structure.r)
    return structure.query_many(mhcs)


def time_queries(
    structure, mhcs: np.ndarray, *, as_filter: bool, reps: int = 3, threads: int = 1
) -> tuple[float, np.ndarray]:
    """Median ns/key over reps; returns (ns_per_key, last results)."""
    if len(mhcs):
        _run_queries(structure, mhcs[: min(256, len(mhcs))], as_filter)  # jit warmup
    times = []
    results = None
    for _ in range(max(1, reps)):
        t0 = time.perf_counter_ns()
        if threads > 1:
            chunks = np.array_split(mhcs, threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda c: _run_queries(structure, c, as_filter), chunks))
            results = np.concatenate(parts)
        else:
            results = _run_queries(structure, mhcs, as_filter)
        times.append(time.perf_counter_ns() - t0)
    ns = statistics.median(times) / max(1, len(mhcs))
    return ns, results


def measure_fp_rate(structure, seed: int, n: int, negatives: int) -> float:
    mhcs = hashing.compute_mhc_u64(synthetic_keys(seed, n, negatives), seed)
    hits = _run_queries(structure, mhcs, as_filter=True)
    return float(np.count_nonzero(hits)) / negatives if negatives else math.nan


def sweep(
    *,
    kind: str = "burr",
    w: int = 64,
    r: int = 8,
    mode: ThresholdMode = ThresholdMode.TWO_BIT,
    bucket_size: int | None = None,
    eps_from: float,
    eps_to: float,
    eps_step: float,
    n: int,
    num_seeds: int = 3,
    base_seed: int = 0,
    queries: int = 100_000,
    negatives: int = 100_000,
    time_reps: int = 3,
) -> list[BenchReport]:
    """Grid of (epsilon, seed) builds with query and fp measurements."""
    reports = []
    n_steps = int(round((eps_to - eps_from) / eps_step)) + 1
    for i in range(n_steps):
        eps = round(eps_from + i * eps_step, 9)
        for s in range(num_seeds):
            seed = base_seed if s == 0 else base_seed ^ hashing.mix64(s)
            structure, report = build_structure(
                kind=kind,
                n=n,
                w=w,
                r=r,
                epsilon=eps,
                mode=mode,
                bucket_size=bucket_size,
                seed=seed,
            )
            if queries:
                q = min(queries, max(n, 1))
                pos = query_workload(structure, kind, seed, n, q, "pos")
                neg = query_workload(structure, kind, seed, n, q, "neg")
                mixed = query_workload(structure, kind, seed, n, q, "mixed50")
                report.pos_ns, _ = time_queries(structure, pos, as_filter=False, reps=time_reps)
                report.neg_ns, _ = time_queries(structure, neg, as_filter=False, reps=time_reps)
                report.mixed_ns, _ = time_queries(structure, mixed, as_filter=False, reps=time_reps)
            if negatives:
                report.fp_rate = measure_fp_rate(structure, seed, n, negatives)
            reports.append(report)
    return reports

"""Bumped ribbon retrieval: overloaded layers with per-bucket bump thresholds.

The slot table is deliberately *undersized* (epsilon < 0), so a plain
build would fail.  Start positions are grouped into buckets of
``bucket_size`` consecutive positions; buckets are processed left to
right, and within a bucket keys are inserted from the highest in-bucket
position down.  The first failed insertion in a bucket picks the smallest
representable threshold covering it; every key below the threshold is
bumped out of the layer (rolling back the ones already placed) and
retried, freshly hashed, in the next layer.  After three bumping layers
the leftovers go to a small plain ribbon with escalating positive slack.

A query reads one per-bucket threshold to learn which layer answers each
key, so lookups stay two-probe: one threshold, one solution window.
Thresholds are stored compressed: full values ("plain"), a two-bit code
{none, lower, upper, all}, or one bit plus an exception list.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, hashing, storage
from .errors import ConstructionFailed, InconsistentDuplicates
from .standard import StandardRibbon, as_pairs, construct_standard, find_conflicting_duplicates

_DUMMY = np.zeros(1, dtype=np.uint64)

FINAL_HASH_LAYER = 3
BUMPING_LAYERS = 3
EXCEPTION_BUCKET_BITS = 32  # accounted index width of one exception entry


class ThresholdMode(enum.Enum):
    PLAIN = "plain"
    TWO_BIT = "2bit"
    ONE_PLUS_BIT = "1+bit"


_MODE_ID = {ThresholdMode.PLAIN: 0, ThresholdMode.TWO_BIT: 1, ThresholdMode.ONE_PLUS_BIT: 2}


def _ceil_stable(x: float) -> int:
    # formulas below mix decimal constants; round away 1e-9 float fuzz
    return math.ceil(round(x, 9))


def two_bit_thresholds(w: int, bucket_size: int, epsilon: float) -> tuple[int, int]:
    """(lower, upper) threshold pair for the two-bit code, per band width."""
    if w <= 32:
        lower = _ceil_stable((0.13 - epsilon / 2.0) * bucket_size)
        upper = _ceil_stable((0.30 - epsilon / 2.0) * bucket_size)
    else:
        lower = _ceil_stable((0.09 - 0.75 * epsilon) * bucket_size)
        upper = _ceil_stable((0.22 - 1.3 * epsilon) * bucket_size)
    lower = max(1, min(lower, bucket_size))
    upper = max(lower, min(upper, bucket_size))
    return lower, upper


def one_plus_bit_epsilon(w: int, bucket_size: int) -> float:
    return -(2.0 / 3.0) * w / (4.0 * bucket_size + w)


def one_plus_bit_threshold(bucket_size: int, epsilon: float) -> int:
    t = _ceil_stable(-2.0 * epsilon * bucket_size + math.sqrt(bucket_size / (1.0 + epsilon)) / 2.0)
    return max(1, min(t, bucket_size))


def default_bucket_size(w: int, mode: ThresholdMode) -> int:
    # anchored to the measured sweet spots for the common widths, with
    # the w^2-over-log-w rule as fallback for the rest
    table = {
        ThresholdMode.PLAIN: {16: 32, 32: 64, 64: 128},
        ThresholdMode.TWO_BIT: {16: 32, 32: 64, 64: 128},
        ThresholdMode.ONE_PLUS_BIT: {16: 16, 32: 32, 64: 128, 128: 512},
    }[mode]
    if w in table:
        return table[w]
    divisor = 4.0 if mode is ThresholdMode.ONE_PLUS_BIT else 2.0
    limit = w * w / (divisor * math.log2(w))
    return 1 << max(1, int(math.floor(math.log2(limit))))


def default_epsilon(w: int, mode: ThresholdMode, bucket_size: int) -> float:
    if mode is ThresholdMode.ONE_PLUS_BIT:
        return one_plus_bit_epsilon(w, bucket_size)
    # narrow bands tolerate less overload per slot than wide ones
    return -3.0 / w if w <= 32 else -4.0 / w


@dataclass(frozen=True)
class BurrConfig:
    w: int
    r: int
    epsilon: float
    bucket_size: int
    mode: ThresholdMode
    lower: int | None = None  # TWO_BIT
    upper: int | None = None  # TWO_BIT
    threshold: int | None = None  # ONE_PLUS_BIT
    layers: int = BUMPING_LAYERS
    final_epsilon_step: float = 0.05
    final_epsilon_cap: float = 1.0

    def __post_init__(self) -> None:
        if self.w not in (16, 32, 64, 128):
            raise ValueError("band width must be one of 16, 32, 64, 128")
        if not 1 <= self.r <= 64:
            raise ValueError("result width must be in [1, 64]")
        if not -1.0 < self.epsilon < 0.0:
            raise ValueError("bumped construction needs epsilon < 0")
        b = self.bucket_size
        if b < 2 or b & (b - 1):
            raise ValueError("bucket size must be a power of two >= 2")
        if self.mode is ThresholdMode.TWO_BIT:
            if self.lower is None or self.upper is None:
                raise ValueError("two-bit mode needs lower and upper thresholds")
            if not 1 <= self.lower <= self.upper <= b:
                raise ValueError("need 1 <= lower <= upper <= bucket size")
        if self.mode is ThresholdMode.ONE_PLUS_BIT:
            if self.threshold is None or not 1 <= self.threshold <= b:
                raise ValueError("one-plus-bit mode needs a threshold in [1, bucket size]")
        if self.layers != BUMPING_LAYERS:
            raise ValueError("the cascade is fixed at three bumping layers")

    @property
    def meta_bits(self) -> int:
        """Threshold bits stored per bucket (exceptions accounted apart)."""
        if self.mode is ThresholdMode.PLAIN:
            return max(1, int(math.log2(self.bucket_size)))
        return 2 if self.mode is ThresholdMode.TWO_BIT else 1

    @property
    def exception_entry_bits(self) -> int:
        return EXCEPTION_BUCKET_BITS + int(math.log2(self.bucket_size)) + 1

    @property
    def final_w(self) -> int:
        return min(self.w, 64)


def default_params(
    w: int,
    mode: ThresholdMode = ThresholdMode.TWO_BIT,
    r: int = 8,
    *,
    epsilon: float | None = None,
    bucket_size: int | None = None,
) -> BurrConfig:
    """Tuned configuration for a band width; epsilon/bucket overridable.

    Threshold parameters are always recomputed from the epsilon actually
    in force, so overriding the overload keeps the bump behaviour matched
    to it.
    """
    if bucket_size is None:
        bucket_size = default_bucket_size(w, mode)
    if epsilon is None:
        epsilon = default_epsilon(w, mode, bucket_size)
    lower = upper = threshold = None
    if mode is ThresholdMode.TWO_BIT:
        lower, upper = two_bit_thresholds(w, bucket_size, epsilon)
    elif mode is ThresholdMode.ONE_PLUS_BIT:
        threshold = one_plus_bit_threshold(bucket_size, epsilon)
    return BurrConfig(
        w=w,
        r=r,
        epsilon=epsilon,
        bucket_size=bucket_size,
        mode=mode,
        lower=lower,
        upper=upper,
        threshold=threshold,
    )


def head_split_config(w: int, r: int = 8, bucket_size: int | None = None) -> BurrConfig:
    """Bump-the-head variant: one code for "first 3w/8 positions bumped".

    Expressed as a two-bit configuration whose lower and upper thresholds
    coincide at ceil(3w/8); kept for experiments, not a tuned default.
    """
    if bucket_size is None:
        bucket_size = default_bucket_size(w, ThresholdMode.TWO_BIT)
    head = math.ceil(3 * w / 8)
    cfg = default_params(w, ThresholdMode.TWO_BIT, r, bucket_size=bucket_size)
    return replace(cfg, lower=head, upper=head)


def choose_threshold(config: BurrConfig, k_fail: int) -> tuple[int, int]:
    """Smallest representable threshold >= k_fail + 1 and its stored code.

    k_fail is the in-bucket position of the first failed insertion; every
    key strictly below the returned threshold must leave the layer.
    """
    b = config.bucket_size
    assert 0 <= k_fail < b
    t_min = k_fail + 1
    if config.mode is ThresholdMode.PLAIN:
        # codes store the threshold directly; the top two values share
        # code b-1, which decodes as "bump everything"
        if t_min > b - 2:
            return b, b - 1
        return t_min, t_min
    if config.mode is ThresholdMode.TWO_BIT:
        if t_min <= config.lower:
            return config.lower, 1
        if t_min <= config.upper:
            return config.upper, 2
        return b, 3
    if t_min <= config.threshold:
        return config.threshold, 1
    return t_min, 1  # needs an exception entry


def decode_threshold_code(config: BurrConfig, code: int, exception: int | None = None) -> int:
    if config.mode is ThresholdMode.PLAIN:
        return config.bucket_size if code == config.bucket_size - 1 else code
    if config.mode is ThresholdMode.TWO_BIT:
        return (0, config.lower, config.upper, config.bucket_size)[code]
    if code == 0:
        return 0
    return exception if exception is not None else config.threshold


@dataclass
class BumpingLayer:
    layer_index: int
    m: int
    n_keys: int
    num_buckets: int
    meta: np.ndarray  # int32 threshold codes, one per bucket
    exc_buckets: np.ndarray  # int64, sorted
    exc_thresholds: np.ndarray  # int32, parallel to exc_buckets
    empty_slots: int
    redundant: int
    solution: storage.InterleavedSolution

    def threshold_for(self, config: BurrConfig, bucket: int) -> int:
        if bucket >= self.num_buckets:
            return 0  # degenerate empty layer: nothing is ever bumped
        code = int(self.meta[bucket])
        if config.mode is ThresholdMode.ONE_PLUS_BIT and code:
            i = bisect_left(self.exc_buckets, bucket)
            if i < len(self.exc_buckets) and self.exc_buckets[i] == bucket:
                return int(self.exc_thresholds[i])
        return decode_threshold_code(config, code)

    def thresholds_for_many(self, config: BurrConfig, buckets: np.ndarray) -> np.ndarray:
        if self.num_buckets == 0:
            return np.zeros(len(buckets), dtype=np.int64)
        codes = self.meta[buckets]
        if config.mode is ThresholdMode.PLAIN:
            t = codes.astype(np.int64)
            t[t == config.bucket_size - 1] = config.bucket_size
            return t
        if config.mode is ThresholdMode.TWO_BIT:
            lut = np.array([0, config.lower, config.upper, config.bucket_size], dtype=np.int64)
            return lut[codes]
        t = np.where(codes == 0, 0, config.threshold).astype(np.int64)
        if len(self.exc_buckets):
            idx = np.searchsorted(self.exc_buckets, buckets)
            idx[idx == len(self.exc_buckets)] = 0
            hit = self.exc_buckets[idx] == buckets
            t[hit] = self.exc_thresholds[idx[hit]]
        return t

    def meta_bits(self, config: BurrConfig) -> int:
        return self.num_buckets * config.meta_bits

    def exception_bits(self, config: BurrConfig) -> int:
        return len(self.exc_buckets) * config.exception_entry_bits


def construct_layer(
    pairs, layer_index: int, config: BurrConfig, seed: int
) -> tuple[BumpingLayer, tuple[np.ndarray, np.ndarray]]:
    """Build one bumping layer; returns it plus the pairs it bumped."""
    mhcs, values = as_pairs(pairs)
    n = len(mhcs)
    w, r, b = config.w, config.r, config.bucket_size
    wide = w > 64

    if n == 0:
        m = w - 1
        z = np.zeros(m, dtype=np.uint64)
        layer = BumpingLayer(
            layer_index=layer_index,
            m=m,
            n_keys=0,
            num_buckets=0,
            meta=np.zeros(0, dtype=np.int32),
            exc_buckets=np.zeros(0, dtype=np.int64),
            exc_thresholds=np.zeros(0, dtype=np.int32),
            empty_slots=m,
            redundant=0,
            solution=storage.build_interleaved(z, m, w, r),
        )
        return layer, (mhcs, values)

    m = math.ceil(n / (1.0 - config.epsilon)) + w - 1
    positions = m - w + 1
    num_buckets = (positions + b - 1) // b

    starts, c_lo, c_hi = hashing.derive_geometry_vec(mhcs, seed, layer_index, m, w)
    log_b = b.bit_length() - 1
    buckets = starts >> log_b
    pos = (starts & (b - 1)).astype(np.int64)

    # bucket-major, top position first; ties resolved stably by mhc
    order = np.lexsort((mhcs, (b - 1) - pos, buckets))
    starts = starts[order]
    c_lo = c_lo[order]
    c_hi = c_hi[order] if c_hi is not None else None
    vals = values[order]
    pos_s = pos[order]
    mhcs_s = mhcs[order]
    bounds = np.searchsorted(buckets[order], np.arange(num_buckets + 1, dtype=np.int64))

    rows_lo = np.zeros(m, dtype=np.uint64)
    rows_hi = np.zeros(m if wide else 1, dtype=np.uint64)
    rhs = np.zeros(m, dtype=np.uint64)
    meta = np.zeros(num_buckets, dtype=np.int32)
    slot_of = np.full(n, -3, dtype=np.int64)
    bumped = np.zeros(n, dtype=np.bool_)
    exc_buckets = np.zeros(num_buckets, dtype=np.int64)
    exc_thresholds = np.zeros(num_buckets, dtype=np.int32)

    n_exc = _kernels.build_buckets(
        rows_lo,
        rows_hi,
        rhs,
        wide,
        starts,
        c_lo,
        c_hi if c_hi is not None else _DUMMY,
        vals,
        pos_s,
        bounds,
        b,
        _MODE_ID[config.mode],
        config.lower or 0,
        config.upper or 0,
        config.threshold or 0,
        meta,
        slot_of,
        bumped,
        exc_buckets,
        exc_thresholds,
    )

    z = np.zeros(m, dtype=np.uint64)
    _kernels.back_substitute(rows_lo, rows_hi, rhs, wide, z, 0, r)
    occupied = int(np.count_nonzero(rows_lo & np.uint64(1)))
    redundant = int(np.count_nonzero(slot_of == -1))

    layer = BumpingLayer(
        layer_index=layer_index,
        m=m,
        n_keys=n,
        num_buckets=num_buckets,
        meta=meta,
        exc_buckets=exc_buckets[:n_exc].copy(),
        exc_thresholds=exc_thresholds[:n_exc].copy(),
        empty_slots=m - occupied,
        redundant=redundant,
        solution=storage.build_interleaved(z, m, w, r),
    )
    return layer, (mhcs_s[bumped], vals[bumped])


@dataclass
class LayerSpace:
    layer_index: int
    n_keys: int
    slots: int
    empty_slots: int
    solution_bits: int
    meta_bits: int
    exception_bits: int
    exceptions: int


@dataclass
class SpaceReport:
    n: int
    r: int
    total_bits: int
    bits_per_key: float
    overhead: float
    empty_fraction: float  # bumping layers, slot-weighted
    meta_bits_per_bucket: float
    layers: list[LayerSpace]
    final_solution_bits: int
    final_slots: int
    final_keys: int


class BumpedRibbon:
    def __init__(
        self,
        config: BurrConfig,
        seed: int,
        layers: list[BumpingLayer],
        final: StandardRibbon,
        n: int,
    ):
        self.config = config
        self.seed = seed
        self.layers = layers
        self.final = final
        self.n = n

    @property
    def r(self) -> int:
        return self.config.r

    def _answering_layer(self, mhc: int) -> tuple[BumpingLayer, int, int] | None:
        cfg = self.config
        for layer in self.layers:
            start = hashing.layer_start(mhc, self.seed, layer.layer_index, layer.m, cfg.w)
            bucket, pos = hashing.locate_bucket(start, cfg.bucket_size)
            if pos >= layer.threshold_for(cfg, bucket):
                coeff = hashing.layer_coeff(mhc, self.seed, layer.layer_index, cfg.w)
                return layer, start, coeff
        return None

    def query(self, mhc: int) -> int:
        hit = self._answering_layer(mhc)
        if hit is None:
            return self.final.query(mhc)
        layer, start, coeff = hit
        return layer.solution.query(start, coeff)

    def contains(self, mhc: int) -> bool:
        fp = hashing.derive_fingerprint(mhc, self.config.r)
        hit = self._answering_layer(mhc)
        if hit is None:
            return self.final.contains(mhc)
        layer, start, coeff = hit
        return layer.solution.filter_check(start, coeff, fp)

    def query_many(self, mhcs: np.ndarray) -> np.ndarray:
        mhcs = np.asarray(mhcs, dtype=np.uint64)
        out = np.zeros(len(mhcs), dtype=np.uint64)
        pending = np.arange(len(mhcs), dtype=np.int64)
        cfg = self.config
        log_b = cfg.bucket_size.bit_length() - 1
        for layer in self.layers:
            if len(pending) == 0:
                break
            sub = mhcs[pending]
            starts, c_lo, c_hi = hashing.derive_geometry_vec(
                sub, self.seed, layer.layer_index, layer.m, cfg.w
            )
            buckets = (starts >> log_b).astype(np.int64)
            pos = starts & (cfg.bucket_size - 1)
            here = pos >= layer.thresholds_for_many(cfg, buckets)
            if np.any(here):
                out[pending[here]] = layer.solution.query_many(
                    starts[here], c_lo[here], c_hi[here] if c_hi is not None else None
                )
            pending = pending[~here]
        if len(pending):
            out[pending] = self.final.query_many(mhcs[pending])
        return out

    def contains_many(self, mhcs: np.ndarray) -> np.ndarray:
        mhcs = np.asarray(mhcs, dtype=np.uint64)
        fps = hashing.derive_fingerprint_vec(mhcs, self.config.r)
        return self.query_many(mhcs) == fps

    def space_report(self) -> SpaceReport:
        cfg = self.config
        layer_rows: list[LayerSpace] = []
        total = 0
        meta_total = 0
        bucket_total = 0
        empty = 0
        slots = 0
        for layer in self.layers:
            sol_bits = layer.solution.storage_bits()
            mb = layer.meta_bits(cfg)
            eb = layer.exception_bits(cfg)
            layer_rows.append(
                LayerSpace(
                    layer_index=layer.layer_index,
                    n_keys=layer.n_keys,
                    slots=layer.m,
                    empty_slots=layer.empty_slots,
                    solution_bits=sol_bits,
                    meta_bits=mb,
                    exception_bits=eb,
                    exceptions=len(layer.exc_buckets),
                )
            )
            total += sol_bits + mb + eb
            meta_total += mb + eb
            bucket_total += layer.num_buckets
            empty += layer.empty_slots
            slots += layer.m
        final_bits = self.final.storage_bits()
        total += final_bits
        stored = self.n * cfg.r
        return SpaceReport(
            n=self.n,
            r=cfg.r,
            total_bits=total,
            bits_per_key=total / self.n if self.n else float("nan"),
            overhead=total / stored - 1.0 if stored else float("nan"),
            empty_fraction=empty / slots if slots else 0.0,
            meta_bits_per_bucket=meta_total / bucket_total if bucket_total else 0.0,
            layers=layer_rows,
            final_solution_bits=final_bits,
            final_slots=self.final.m,
            final_keys=self.final.n,
        )


def construct_burr(pairs, config: BurrConfig, seed: int = 0) -> BumpedRibbon:
    mhcs, values = as_pairs(pairs)
    n = len(mhcs)
    layers: list[BumpingLayer] = []
    remaining: tuple[np.ndarray, np.ndarray] = (mhcs, values)
    for li in range(BUMPING_LAYERS):
        layer, remaining = construct_layer(remaining, li, config, seed)
        layers.append(layer)

    final = _construct_final(remaining, config, seed)
    return BumpedRibbon(config, seed, layers, final, n)


def _construct_final(pairs, config: BurrConfig, seed: int) -> StandardRibbon:
    """Escalating-slack plain ribbon over whatever the cascade bumped last."""
    eps = 0.0
    step = 0
    while eps < config.final_epsilon_cap:
        try:
            return construct_standard(
                pairs,
                w=config.final_w,
                r=config.r,
                epsilon=eps,
                seed=seed ^ hashing.mix64(0x10000 + step),
                max_attempts=2,
                hash_layer=FINAL_HASH_LAYER,
            )
        except ConstructionFailed:
            step += 1
            eps = round(step * config.final_epsilon_step, 9)
    mhcs, values = as_pairs(pairs)
    if find_conflicting_duplicates(mhcs, values):
        raise InconsistentDuplicates(
            "two keys share a master hash code with different values; surfaced at the final layer"
        )
    raise ConstructionFailed("final layer exhausted its slack escalation")

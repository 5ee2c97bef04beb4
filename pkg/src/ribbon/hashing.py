"""Key hashing and per-layer derivation of slot geometry.

Every key is reduced once to a 64-bit master hash code (MHC).  All
quantities a ribbon structure needs afterwards -- start position,
coefficient bits, fingerprint, bucket coordinates, and fresh geometry for
each fallback layer -- are derived from the MHC with cheap congruential
maps, so keys are never rehashed when a structure retries or cascades.

Derivation scheme, fixed for the serialization format:

* ``seeded = mhc XOR mix64(seed)`` folds the structure seed in once.
* ``base = derive(seeded, LAYER_HASH_PARAMS[layer])`` separates layers.
* start position: multiply-high range reduction of ``derive(base, _START)``.
* coefficient word(s): low bits of ``derive(base, _COEFF_LO)`` (and
  ``_COEFF_HI`` for the two-word 128-bit configuration), bit 0 forced to 1.
* fingerprint: top ``r`` bits of ``mix64(mhc XOR _FINGERPRINT_SALT)``,
  independent of seed and layer.

Each (multiplier, addend) pair defines a bijection of Z/2^64 (multiplier
is 1 mod 4, addend odd), so no derivation step loses entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = 0xFFFF_FFFF_FFFF_FFFF

# mix64 finalizer constants (public-domain MurmurHash3 avalanche step)
_MIX_MULT1 = 0xFF51_AFD7_ED55_8CCD
_MIX_MULT2 = 0xC4CE_B9FE_1A85_EC53


def mix64(x: int) -> int:
    """Full-avalanche bijective scramble of a 64-bit word."""
    x &= MASK64
    x ^= x >> 33
    x = (x * _MIX_MULT1) & MASK64
    x ^= x >> 33
    x = (x * _MIX_MULT2) & MASK64
    x ^= x >> 33
    return x


@dataclass(frozen=True)
class LayerHashParams:
    """Congruential map constants for one derivation stream."""

    layer_index: int
    multiplier: int
    addend: int

    def __post_init__(self) -> None:
        if self.multiplier % 4 != 1:
            raise ValueError("multiplier must be 1 mod 4")
        if self.addend % 2 != 1:
            raise ValueError("addend must be odd")


# One pair per cascade layer (three bumping layers + final plain ribbon).
# Multipliers are spectrally tested 64-bit constants; addends are odd
# scramble constants from splitmix64/xorshift lineage.
LAYER_HASH_PARAMS: tuple[LayerHashParams, ...] = (
    LayerHashParams(0, 0x5851_F42D_4C95_7F2D, 0x9E37_79B9_7F4A_7C15),
    LayerHashParams(1, 0xAF25_1AF3_B0F0_25B5, 0xBF58_476D_1CE4_E5B9),
    LayerHashParams(2, 0xB564_EF22_EC7A_ECE5, 0x94D0_49BB_1331_11EB),
    LayerHashParams(3, 0xF7C2_EBC0_8F67_F2B5, 0x2545_F491_4F6C_DD1D),
)

NUM_LAYERS = len(LAYER_HASH_PARAMS)

# Sub-streams, disjoint from the layer table and from each other.
_START_PARAMS = (0xD134_2543_DE82_EF95, 0xCA5A_8263_9512_1157)
_COEFF_LO_PARAMS = (0xFF37_F1F7_5818_0525, 0x8CB9_2BA7_2F3D_8DD7)
_COEFF_HI_PARAMS = (0x2360_ED05_1FC6_5DA5, 0xD6E8_FEB8_6659_FD93)

_FINGERPRINT_SALT = 0x27D4_EB2F_1656_67C5

# Fill constant for pseudorandom free slots (homogeneous filters); odd.
FREE_FILL_MULTIPLIER = 0x9E37_79B9_7F4A_7C15

# Exported so the file format can record and verify the derivation scheme.
DERIVATION_CONSTANTS: tuple[int, ...] = (
    *(p.multiplier for p in LAYER_HASH_PARAMS),
    *(p.addend for p in LAYER_HASH_PARAMS),
    *_START_PARAMS,
    *_COEFF_LO_PARAMS,
    *_COEFF_HI_PARAMS,
    _FINGERPRINT_SALT,
    FREE_FILL_MULTIPLIER,
    _MIX_MULT1,
    _MIX_MULT2,
)


def compute_mhc(key: bytes, seed: int) -> int:
    """Hash an arbitrary byte string to its 64-bit master hash code.

    Chunked multiply-and-avalanche construction: the length and seed prime
    the state, then each 8-byte little-endian chunk (last one zero padded)
    is folded in through mix64.  Not cryptographic; meant for hashing keys
    once into a code every structure layer derives from.
    """
    h = mix64((seed & MASK64) ^ ((len(key) * _MIX_MULT2) & MASK64))
    for off in range(0, len(key), 8):
        chunk = key[off : off + 8]
        word = int.from_bytes(chunk, "little")
        h = mix64(h ^ ((word * _MIX_MULT1) & MASK64))
    return h


def derive(mhc: int, params: LayerHashParams) -> int:
    """Apply one congruential derivation step (bijective on 64-bit words)."""
    return (params.multiplier * mhc + params.addend) & MASK64


def derive_inverse(value: int, params: LayerHashParams) -> int:
    """Invert ``derive`` (the multiplier is invertible mod 2^64)."""
    inv = pow(params.multiplier, -1, 1 << 64)
    return (inv * (value - params.addend)) & MASK64


def _mulhi64(a: int, k: int) -> int:
    # floor(a * k / 2^64) via 32-bit limbs; works for Python ints and
    # numpy uint64 arrays alike (all intermediates stay below 2^64).
    mask32 = 0xFFFF_FFFF
    a_lo = a & mask32
    a_hi = a >> 32
    k_lo = k & mask32
    k_hi = k >> 32
    ll = a_lo * k_lo
    lh = a_lo * k_hi
    hl = a_hi * k_lo
    mid = (ll >> 32) + (lh & mask32) + (hl & mask32)
    return a_hi * k_hi + (lh >> 32) + (hl >> 32) + (mid >> 32)


def derive_start(h: int, m: int, w: int) -> int:
    """Map a derived word to a start position in ``[0, m - w]``.

    Fixed-point multiply-high reduction: ``floor(h * (m - w + 1) / 2^64)``.
    Monotone in ``h`` and bias-free to within one part in 2^64.
    """
    span = m - w + 1
    if span <= 0:
        return 0  # degenerate empty structure; the only position is 0
    return _mulhi64(h, span)


def derive_coeff(h: int, w: int) -> int:
    """Low ``w`` bits of ``h`` with bit 0 forced to 1 (1 <= w <= 64)."""
    assert 1 <= w <= 64
    if w == 64:
        return (h | 1) & MASK64
    return (h & ((1 << w) - 1)) | 1


def derive_fingerprint(mhc: int, r: int) -> int:
    """r-bit fingerprint of a key, independent of seed and layer."""
    assert 1 <= r <= 64
    return mix64(mhc ^ _FINGERPRINT_SALT) >> (64 - r)


def locate_bucket(start: int, bucket_size: int) -> tuple[int, int]:
    """Split a start position into (bucket index, in-bucket position)."""
    return start // bucket_size, start % bucket_size


@dataclass(frozen=True)
class KeyGeometry:
    """Everything one layer needs to know about one key."""

    start: int
    coeff: int  # w-bit word, bit 0 set; a plain Python int even for w=128
    fingerprint: int
    bucket: int
    in_bucket_pos: int


def _layer_base(mhc: int, seed: int, layer: int) -> int:
    seeded = (mhc ^ mix64(seed)) & MASK64
    p = LAYER_HASH_PARAMS[layer]
    return (p.multiplier * seeded + p.addend) & MASK64


def layer_start(mhc: int, seed: int, layer: int, m: int, w: int) -> int:
    base = _layer_base(mhc, seed, layer)
    mult, add = _START_PARAMS
    return derive_start((mult * base + add) & MASK64, m, w)


def layer_coeff(mhc: int, seed: int, layer: int, w: int) -> int:
    base = _layer_base(mhc, seed, layer)
    mult, add = _COEFF_LO_PARAMS
    lo = derive_coeff((mult * base + add) & MASK64, min(w, 64))
    if w <= 64:
        return lo
    assert w == 128
    mult, add = _COEFF_HI_PARAMS
    hi = (mult * base + add) & MASK64
    return lo | (hi << 64)


def key_geometry(
    mhc: int, seed: int, layer: int, m: int, w: int, r: int, bucket_size: int = 0
) -> KeyGeometry:
    """Derive the full per-key geometry for one layer of a structure."""
    start = layer_start(mhc, seed, layer, m, w)
    coeff = layer_coeff(mhc, seed, layer, w)
    fp = derive_fingerprint(mhc, r) if r > 0 else 0
    if bucket_size > 0:
        bucket, pos = locate_bucket(start, bucket_size)
    else:
        bucket, pos = 0, start
    return KeyGeometry(start, coeff, fp, bucket, pos)


# ---------------------------------------------------------------------------
# Vectorized counterparts (numpy uint64 arrays), bit-identical to the
# scalar functions above.  Constants go through np.uint64 so the array
# arithmetic wraps instead of promoting to float.


def _u64(x: int) -> np.uint64:
    return np.uint64(x & MASK64)


def mix64_vec(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(33))
    x = x * _u64(_MIX_MULT1)
    x = x ^ (x >> np.uint64(33))
    x = x * _u64(_MIX_MULT2)
    x = x ^ (x >> np.uint64(33))
    return x


def compute_mhc_u64(words: np.ndarray, seed: int) -> np.ndarray:
    """Vector form of ``compute_mhc`` for 8-byte little-endian keys."""
    h0 = mix64((seed & MASK64) ^ ((8 * _MIX_MULT2) & MASK64))
    return mix64_vec(_u64(h0) ^ (words.astype(np.uint64) * _u64(_MIX_MULT1)))


def _mulhi64_vec(a: np.ndarray, k: int) -> np.ndarray:
    mask32 = np.uint64(0xFFFF_FFFF)
    a_lo = a & mask32
    a_hi = a >> np.uint64(32)
    k_lo = _u64(k & 0xFFFF_FFFF)
    k_hi = _u64(k >> 32)
    ll = a_lo * k_lo
    lh = a_lo * k_hi
    hl = a_hi * k_lo
    mid = (ll >> np.uint64(32)) + (lh & mask32) + (hl & mask32)
    return a_hi * k_hi + (lh >> np.uint64(32)) + (hl >> np.uint64(32)) + (mid >> np.uint64(32))


def derive_geometry_vec(
    mhcs: np.ndarray, seed: int, layer: int, m: int, w: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Per-key (start, coeff_lo[, coeff_hi]) arrays for one layer.

    Returns starts as int64 and coefficient words as uint64; the high
    word is None unless w == 128.
    """
    p = LAYER_HASH_PARAMS[layer]
    seeded = mhcs.astype(np.uint64) ^ _u64(mix64(seed))
    base = _u64(p.multiplier) * seeded + _u64(p.addend)

    hs = _u64(_START_PARAMS[0]) * base + _u64(_START_PARAMS[1])
    span = m - w + 1
    if span <= 0:
        starts = np.zeros(len(mhcs), dtype=np.int64)
    else:
        starts = _mulhi64_vec(hs, span).astype(np.int64)

    hc = _u64(_COEFF_LO_PARAMS[0]) * base + _u64(_COEFF_LO_PARAMS[1])
    wl = min(w, 64)
    if wl == 64:
        coeff_lo = hc | np.uint64(1)
    else:
        coeff_lo = (hc & _u64((1 << wl) - 1)) | np.uint64(1)

    coeff_hi = None
    if w > 64:
        coeff_hi = _u64(_COEFF_HI_PARAMS[0]) * base + _u64(_COEFF_HI_PARAMS[1])
    return starts, coeff_lo, coeff_hi


def derive_fingerprint_vec(mhcs: np.ndarray, r: int) -> np.ndarray:
    return mix64_vec(mhcs.astype(np.uint64) ^ _u64(_FINGERPRINT_SALT)) >> np.uint64(64 - r)

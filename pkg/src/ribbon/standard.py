"""Plain ribbon retrieval structure.

Stores pairs (mhc, value) so that ``query(mhc)`` returns the value for
every construction key.  The slot table is oversized by a factor
1/(1 - epsilon) plus w - 1 border slots; if insertion hits a linearly
inconsistent row the whole construction restarts with a reseeded
derivation, up to ``max_attempts`` times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, hashing, storage
from .core import BandedSystem, back_substitute
from .errors import ConstructionFailed, InconsistentDuplicates

_DUMMY = np.zeros(1, dtype=np.uint64)


def as_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Normalize key/value input to a pair of uint64 arrays."""
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        mhcs = pairs[0].astype(np.uint64, copy=False)
        values = pairs[1].astype(np.uint64, copy=False)
        if len(mhcs) != len(values):
            raise ValueError("mhc and value arrays differ in length")
        return mhcs, values
    items = list(pairs)
    mhcs = np.fromiter((k for k, _ in items), dtype=np.uint64, count=len(items))
    values = np.fromiter((v for _, v in items), dtype=np.uint64, count=len(items))
    return mhcs, values


def slot_count(n: int, w: int, epsilon: float) -> int:
    """Slots for n keys at the given slack; w - 1 border slots always."""
    if n == 0:
        return w - 1 if w > 1 else 1
    return math.ceil(n / (1.0 - epsilon)) + w - 1


def find_conflicting_duplicates(mhcs: np.ndarray, values: np.ndarray) -> bool:
    """True when some mhc appears twice with different values."""
    if len(mhcs) < 2:
        return False
    order = np.lexsort((values, mhcs))
    sm = mhcs[order]
    sv = values[order]
    same_key = sm[1:] == sm[:-1]
    return bool(np.any(same_key & (sv[1:] != sv[:-1])))


@dataclass
class StandardRibbon:
    w: int
    r: int
    epsilon: float
    m: int
    n: int
    seed: int
    attempts: int  # attempts used; the last one succeeded
    hash_layer: int
    solution: storage.InterleavedSolution | storage.ContiguousSolution

    @property
    def effective_seed(self) -> int:
        # attempt t derives with seed XOR mix64(t); mix64(0) == 0
        return self.seed ^ hashing.mix64(self.attempts - 1)

    def _geometry(self, mhc: int) -> tuple[int, int]:
        seed = self.effective_seed
        start = hashing.layer_start(mhc, seed, self.hash_layer, self.m, self.w)
        coeff = hashing.layer_coeff(mhc, seed, self.hash_layer, self.w)
        return start, coeff

    def query(self, mhc: int) -> int:
        start, coeff = self._geometry(mhc)
        return self.solution.query(start, coeff)

    def query_many(self, mhcs: np.ndarray) -> np.ndarray:
        starts, c_lo, c_hi = hashing.derive_geometry_vec(
            mhcs, self.effective_seed, self.hash_layer, self.m, self.w
        )
        return self.solution.query_many(starts, c_lo, c_hi)

    def contains(self, mhc: int) -> bool:
        """Filter interpretation: value must equal the key's fingerprint."""
        start, coeff = self._geometry(mhc)
        if isinstance(self.solution, storage.InterleavedSolution):
            return self.solution.filter_check(start, coeff, hashing.derive_fingerprint(mhc, self.r))
        return self.query(mhc) == hashing.derive_fingerprint(mhc, self.r)

    def storage_bits(self) -> int:
        return self.solution.storage_bits()


def construct_standard(
    pairs,
    *,
    w: int,
    r: int,
    epsilon: float,
    seed: int = 0,
    max_attempts: int = 16,
    hash_layer: int = 0,
    layout: str = "interleaved",
) -> StandardRibbon:
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    if max_attempts < 1:
        raise ValueError("need at least one attempt")
    mhcs, values = as_pairs(pairs)
    n = len(mhcs)
    m = slot_count(n, w, epsilon)
    wide = w > 64

    for attempt in range(max_attempts):
        eff_seed = seed ^ hashing.mix64(attempt)
        sys = BandedSystem(m, w, r)
        if n:
            starts, c_lo, c_hi = hashing.derive_geometry_vec(mhcs, eff_seed, hash_layer, m, w)
            _, _, fail_idx = _kernels.insert_all(
                sys.rows_lo,
                sys.rows_hi,
                sys.rhs,
                wide,
                starts,
                c_lo,
                c_hi if c_hi is not None else _DUMMY,
                values,
            )
            if fail_idx >= 0:
                continue
        z = back_substitute(sys)
        if layout == "contiguous":
            sol = storage.build_contiguous(z, m, r)
        else:
            sol = storage.build_interleaved(z, m, w, r)
        return StandardRibbon(
            w=w,
            r=r,
            epsilon=epsilon,
            m=m,
            n=n,
            seed=seed,
            attempts=attempt + 1,
            hash_layer=hash_layer,
            solution=sol,
        )

    if find_conflicting_duplicates(mhcs, values):
        raise InconsistentDuplicates(
            "two keys share a master hash code with different values; no reseeding can fix that"
        )
    raise ConstructionFailed(
        f"no solvable system in {max_attempts} attempts (n={n}, m={m}, w={w}, epsilon={epsilon})"
    )

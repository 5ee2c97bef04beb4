"""Homogeneous ribbon filter.

All right-hand sides are zero, so insertion can never produce an
inconsistent row: every key's equation is satisfiable by construction and
the build succeeds on the first pass regardless of epsilon.  Membership
is decided by whether the query window XORs to zero.  Free slots are
filled with scrambled nonzero values, otherwise long empty runs would
answer zero for everything near them.

The false positive rate is 2^-r plus a positive-correlation term that
shrinks exponentially in epsilon * w, so narrow bands need noticeably
more slack than wide ones for the same guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, hashing, storage
from .core import BandedSystem, ScrambledFill, back_substitute
from .standard import slot_count

_DUMMY = np.zeros(1, dtype=np.uint64)


def default_epsilon(w: int, r: int) -> float:
    """Slack heuristic: enough to keep the correlation term below 2^-r."""
    eps = max(r, math.log2(w)) * 2.0 / w
    return min(max(eps, 0.02), 0.5)


@dataclass
class HomogeneousFilter:
    w: int
    r: int
    epsilon: float
    m: int
    n: int
    seed: int
    redundant: int
    solution: storage.InterleavedSolution

    def _geometry(self, mhc: int) -> tuple[int, int]:
        start = hashing.layer_start(mhc, self.seed, 0, self.m, self.w)
        coeff = hashing.layer_coeff(mhc, self.seed, 0, self.w)
        return start, coeff

    def contains(self, mhc: int) -> bool:
        start, coeff = self._geometry(mhc)
        return self.solution.filter_check(start, coeff, 0)

    def contains_many(self, mhcs: np.ndarray) -> np.ndarray:
        starts, c_lo, c_hi = hashing.derive_geometry_vec(mhcs, self.seed, 0, self.m, self.w)
        fps = np.zeros(len(mhcs), dtype=np.uint64)
        hits, _ = self.solution.filter_check_many(starts, c_lo, c_hi, fps)
        return hits

    def expected_fp_rate(self) -> float:
        return 2.0 ** -self.r

    def storage_bits(self) -> int:
        return self.solution.storage_bits()


def construct_homogeneous(
    mhcs,
    *,
    w: int,
    r: int,
    epsilon: float | None = None,
    seed: int = 0,
) -> HomogeneousFilter:
    """Single-pass build; never restarts and never fails."""
    mhcs = np.asarray(mhcs, dtype=np.uint64)
    n = len(mhcs)
    if epsilon is None:
        epsilon = default_epsilon(w, r)
    if epsilon <= 0.0:
        raise ValueError("homogeneous filters need positive slack")
    m = slot_count(n, w, epsilon)
    wide = w > 64

    sys = BandedSystem(m, w, r)
    redundant = 0
    if n:
        starts, c_lo, c_hi = hashing.derive_geometry_vec(mhcs, seed, 0, m, w)
        order = np.argsort(starts, kind="stable")
        values = np.zeros(n, dtype=np.uint64)
        placed, redundant, fail_idx = _kernels.insert_all(
            sys.rows_lo,
            sys.rows_hi,
            sys.rhs,
            wide,
            starts[order],
            c_lo[order],
            c_hi[order] if c_hi is not None else _DUMMY,
            values,
        )
        assert fail_idx == -1, "zero right-hand sides cannot conflict"

    fill = ScrambledFill(hashing.FREE_FILL_MULTIPLIER, r)
    z = back_substitute(sys, fill)
    sol = storage.build_interleaved(z, m, w, r)
    return HomogeneousFilter(
        w=w, r=r, epsilon=epsilon, m=m, n=n, seed=seed, redundant=int(redundant), solution=sol
    )

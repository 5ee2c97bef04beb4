"""Incremental solver for banded GF(2) systems.

The equations of a ribbon structure form rows whose nonzero coefficients
fit in a width-w window starting at the key's start position.  Rows are
absorbed one at a time into an echelon form: walk right from the start
slot, XORing against stored rows, until the leading coefficient lands in
an empty slot (success), the row vanishes with matching right-hand side
(redundant), or vanishes with a conflicting one (failure).  Slots filled
earlier are never touched again, which is what makes rollback by zeroing
recently filled slots safe.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels

MASK64 = 0xFFFF_FFFF_FFFF_FFFF


class Outcome(enum.Enum):
    SUCCESS = "success"
    REDUNDANT = "redundant"
    FAILURE = "failure"


@dataclass(frozen=True)
class InsertResult:
    outcome: Outcome
    slot: int | None = None  # set only on SUCCESS


class BandedSystem:
    """Mutable row store for one construction; w up to 64, or exactly 128.

    Invariants kept by every operation:
      * slot i is occupied iff ``rows_lo[i]`` has bit 0 set;
      * a row at slot i only references slots i .. i + w - 1, and never
        past the last slot.
    """

    def __init__(self, m: int, w: int, r: int):
        if m < 1:
            raise ValueError("need at least one slot")
        if not (1 <= w <= 64 or w == 128):
            raise ValueError("band width must be in [1, 64] or exactly 128")
        if not 1 <= r <= 64:
            raise ValueError("result width must be in [1, 64]")
        self.m = m
        self.w = w
        self.r = r
        self.wide = w > 64
        self.rows_lo = np.zeros(m, dtype=np.uint64)
        self.rows_hi = np.zeros(m if self.wide else 1, dtype=np.uint64)
        self.rhs = np.zeros(m, dtype=np.uint64)

    def insert_row(self, start: int, coeff: int, value: int) -> InsertResult:
        assert 0 <= start <= max(0, self.m - self.w), "start out of range"
        assert coeff & 1, "coefficient bit 0 must be set"
        assert coeff < (1 << self.w), "coefficient wider than the band"
        assert 0 <= value < (1 << self.r), "value wider than r bits"
        res = _kernels.insert_one(
            self.rows_lo,
            self.rows_hi,
            self.rhs,
            self.wide,
            start,
            np.uint64(coeff & MASK64),
            np.uint64(coeff >> 64),
            np.uint64(value),
        )
        if res == -1:
            return InsertResult(Outcome.REDUNDANT)
        if res == -2:
            return InsertResult(Outcome.FAILURE)
        return InsertResult(Outcome.SUCCESS, int(res))

    def rollback(self, slots) -> None:
        """Clear the given slots (the most recently filled ones)."""
        for s in slots:
            self.rows_lo[s] = 0
            self.rhs[s] = 0
            if self.wide:
                self.rows_hi[s] = 0

    def occupied_mask(self) -> np.ndarray:
        return (self.rows_lo & np.uint64(1)).astype(bool)

    def diagnostics(self) -> tuple[int, int]:
        occupied = int(np.count_nonzero(self.rows_lo & np.uint64(1)))
        return occupied, self.m - occupied


class ZeroFill:
    """Free-slot policy: every free slot gets zero."""

    multiplier = 0

    def __call__(self, slot: int) -> int:
        return 0


class ScrambledFill:
    """Free-slot policy: slot i gets (multiplier * i) mod 2^r, odd multiplier.

    Spreads nonzero values over free slots so an all-zero query window is
    unlikely unless it was solved to be zero.
    """

    def __init__(self, multiplier: int, r: int):
        assert multiplier % 2 == 1
        self.multiplier = multiplier
        self.r = r

    def __call__(self, slot: int) -> int:
        return (self.multiplier * slot) & ((1 << self.r) - 1)


zero_fill = ZeroFill()


def back_substitute(system: BandedSystem, free_policy=zero_fill) -> np.ndarray:
    """Solve the system bottom-up; returns one r-bit word per slot.

    Occupied slots get the XOR of their right-hand side with the already
    solved slots their row references; free slots are assigned by
    ``free_policy``.  The two built-in policies run inside the compiled
    kernel; any other callable is applied slot by slot.
    """
    z = np.zeros(system.m, dtype=np.uint64)
    if isinstance(free_policy, (ZeroFill, ScrambledFill)):
        # plain Python ints above 2**63 don't unbox as int64 args
        _kernels.back_substitute(
            system.rows_lo,
            system.rows_hi,
            system.rhs,
            system.wide,
            z,
            np.uint64(free_policy.multiplier & MASK64),
            system.r,
        )
        return z
    # generic fallback: fill free slots first, then one kernel pass would
    # overwrite them, so do the whole substitution in Python
    mask = (1 << system.r) - 1
    occupied = system.occupied_mask()
    for i in range(system.m - 1, -1, -1):
        if not occupied[i]:
            z[i] = free_policy(i) & mask
            continue
        acc = int(system.rhs[i])
        row = int(system.rows_lo[i])
        if system.wide:
            row |= int(system.rows_hi[i]) << 64
        row >>= 1
        j = i + 1
        while row:
            if row & 1:
                acc ^= int(z[j])
            row >>= 1
            j += 1
        z[i] = acc
    return z

"""Solution storage backends and their query kernels.

Two layouts with identical query semantics:

* ``InterleavedSolution`` -- blockwise bit-transposed words.  Block u
  covers slots u*w .. u*w + w - 1; word ``u*r + j`` holds result bit j of
  those slots.  A query reads at most two blocks per result bit and
  reduces each to one parity, and a filter probe can stop after the first
  mismatching bit.  One extra all-zero guard block is kept in memory so
  queries near the top never branch on bounds.
* ``ContiguousSolution`` -- entries packed little-endian, entry i at bit
  offset i*r.  Queries XOR one entry per set coefficient bit; simpler,
  cheaper to build, slower to probe.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
_DUMMY = np.zeros(1, dtype=np.uint64)


def _split_coeff(coeff: int) -> tuple[np.uint64, np.uint64]:
    return np.uint64(coeff & MASK64), np.uint64(coeff >> 64)


class InterleavedSolution:
    def __init__(self, m: int, w: int, r: int, words_lo: np.ndarray, words_hi: np.ndarray | None):
        self.m = m
        self.w = w
        self.r = r
        self.wide = w > 64
        self.num_blocks = (m + w - 1) // w
        self.words_lo = words_lo
        self.words_hi = words_hi if words_hi is not None else _DUMMY
        assert len(self.words_lo) == (self.num_blocks + 1) * r

    def query(self, start: int, coeff: int) -> int:
        c_lo, c_hi = _split_coeff(coeff)
        return int(
            _kernels.query_one(
                self.words_lo, self.words_hi, self.r, self.w, self.wide, start, c_lo, c_hi
            )
        )

    def query_many(self, starts: np.ndarray, c_lo: np.ndarray, c_hi: np.ndarray | None) -> np.ndarray:
        out = np.empty(len(starts), dtype=np.uint64)
        _kernels.query_many(
            self.words_lo,
            self.words_hi,
            self.r,
            self.w,
            self.wide,
            starts,
            c_lo,
            c_hi if c_hi is not None else _DUMMY,
            out,
        )
        return out

    def filter_check(self, start: int, coeff: int, fingerprint: int) -> bool:
        c_lo, c_hi = _split_coeff(coeff)
        packed = _kernels.filter_check(
            self.words_lo,
            self.words_hi,
            self.r,
            self.w,
            self.wide,
            start,
            c_lo,
            c_hi,
            np.uint64(fingerprint),
        )
        return bool(packed & 1)

    def filter_check_counted(self, start: int, coeff: int, fingerprint: int) -> tuple[bool, int]:
        """Like filter_check but also reports result bits examined."""
        c_lo, c_hi = _split_coeff(coeff)
        packed = _kernels.filter_check(
            self.words_lo,
            self.words_hi,
            self.r,
            self.w,
            self.wide,
            start,
            c_lo,
            c_hi,
            np.uint64(fingerprint),
        )
        return bool(packed & 1), int(packed) >> 1

    def filter_check_many(
        self,
        starts: np.ndarray,
        c_lo: np.ndarray,
        c_hi: np.ndarray | None,
        fps: np.ndarray,
    ) -> tuple[np.ndarray, int]:
        """Vector probe; returns (hit mask, total result bits examined)."""
        hits = np.empty(len(starts), dtype=np.uint8)
        bits = np.zeros(1, dtype=np.int64)
        _kernels.filter_check_many(
            self.words_lo,
            self.words_hi,
            self.r,
            self.w,
            self.wide,
            starts,
            c_lo,
            c_hi if c_hi is not None else _DUMMY,
            fps,
            hits,
            bits,
        )
        return hits.astype(bool), int(bits[0])

    def storage_bits(self) -> int:
        # guard block excluded: it is reconstructed, never stored
        return self.num_blocks * self.r * self.w


class ContiguousSolution:
    def __init__(self, m: int, r: int, bits: np.ndarray):
        self.m = m
        self.r = r
        self.bits = bits  # includes one trailing guard word

    def query(self, start: int, coeff: int) -> int:
        c_lo, c_hi = _split_coeff(coeff)
        wide = coeff >> 64 != 0
        return int(_kernels.query_contiguous_one(self.bits, self.r, wide, start, c_lo, c_hi))

    def query_many(self, starts: np.ndarray, c_lo: np.ndarray, c_hi: np.ndarray | None) -> np.ndarray:
        out = np.empty(len(starts), dtype=np.uint64)
        _kernels.query_contiguous_many(
            self.bits,
            self.r,
            c_hi is not None,
            starts,
            c_lo,
            c_hi if c_hi is not None else _DUMMY,
            out,
        )
        return out

    def entry(self, i: int) -> int:
        p = i * self.r
        wd, off = divmod(p, 64)
        v = int(self.bits[wd]) >> off
        if off + self.r > 64:
            v |= int(self.bits[wd + 1]) << (64 - off)
        return v & ((1 << self.r) - 1)

    def storage_bits(self) -> int:
        return self.m * self.r


def build_interleaved(z: np.ndarray, m: int, w: int, r: int) -> InterleavedSolution:
    num_blocks = (m + w - 1) // w
    words_lo = np.zeros((num_blocks + 1) * r, dtype=np.uint64)
    wide = w > 64
    words_hi = np.zeros((num_blocks + 1) * r, dtype=np.uint64) if wide else None
    _kernels.fill_interleaved(z, m, w, r, words_lo, words_hi if wide else _DUMMY, wide)
    return InterleavedSolution(m, w, r, words_lo, words_hi)


def build_contiguous(z: np.ndarray, m: int, r: int) -> ContiguousSolution:
    n_words = (m * r + 63) // 64 + 1  # +1 guard word for unconditional reads
    bits = np.zeros(n_words, dtype=np.uint64)
    _kernels.fill_contiguous(z, r, bits)
    return ContiguousSolution(m, r, bits)


def query_interleaved(sol: InterleavedSolution, start: int, coeff: int) -> int:
    return sol.query(start, coeff)


def query_contiguous(sol: ContiguousSolution, start: int, coeff: int) -> int:
    return sol.query(start, coeff)


def filter_check_interleaved(sol: InterleavedSolution, start: int, coeff: int, fingerprint: int) -> bool:
    return sol.filter_check(start, coeff, fingerprint)

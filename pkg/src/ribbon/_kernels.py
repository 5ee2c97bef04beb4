"""Jit-compiled inner loops shared by every structure variant.

All kernels operate on bare numpy arrays so the surrounding classes stay
plain Python.  Coefficient rows are carried as (lo, hi) uint64 pairs; the
``wide`` flag selects the two-word path used by 128-bit band widths, and
narrow callers pass a 1-element dummy for the hi arrays (never indexed).

Conventions, relied on throughout:
  * a stored row always has bit 0 set, so ``rows_lo[i] & 1`` doubles as
    the occupancy test;
  * coefficient bit j of the row at slot i refers to slot i + j;
  * insertion walk results: slot index >= 0, -1 redundant, -2 failure.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U = np.uint64
_ZERO = np.uint64(0)
_ONE = np.uint64(1)


@njit(inline="always")
def _ctz64(x):
    # trailing-zero count of a nonzero uint64, binary descent
    j = 0
    if x & _U(0xFFFFFFFF) == _ZERO:
        j += 32
        x >>= _U(32)
    if x & _U(0xFFFF) == _ZERO:
        j += 16
        x >>= _U(16)
    if x & _U(0xFF) == _ZERO:
        j += 8
        x >>= _U(8)
    if x & _U(0xF) == _ZERO:
        j += 4
        x >>= _U(4)
    if x & _U(0x3) == _ZERO:
        j += 2
        x >>= _U(2)
    if x & _ONE == _ZERO:
        j += 1
    return j


@njit(inline="always")
def _parity64(x):
    x ^= x >> _U(32)
    x ^= x >> _U(16)
    x ^= x >> _U(8)
    x ^= x >> _U(4)
    x ^= x >> _U(2)
    x ^= x >> _U(1)
    return x & _ONE


@njit(inline="always")
def _insert_walk(rows_lo, rows_hi, rhs, wide, start, c_lo, c_hi, b):
    i = start
    while True:
        if rows_lo[i] & _ONE == _ZERO:
            rows_lo[i] = c_lo
            rhs[i] = b
            if wide:
                rows_hi[i] = c_hi
            return i
        c_lo ^= rows_lo[i]
        b ^= rhs[i]
        if wide:
            c_hi ^= rows_hi[i]
            if c_lo == _ZERO and c_hi == _ZERO:
                return -1 if b == _ZERO else -2
            if c_lo != _ZERO:
                j = _ctz64(c_lo)  # 1 <= j <= 63: bit 0 cancelled
                c_lo = (c_lo >> _U(j)) | (c_hi << _U(64 - j))
                c_hi >>= _U(j)
            else:
                j = 64 + _ctz64(c_hi)
                c_lo = c_hi >> _U(j - 64)
                c_hi = _ZERO
        else:
            if c_lo == _ZERO:
                return -1 if b == _ZERO else -2
            j = _ctz64(c_lo)
            c_lo >>= _U(j)
        i += j


@njit(cache=True, nogil=True)
def insert_one(rows_lo, rows_hi, rhs, wide, start, c_lo, c_hi, b):
    return _insert_walk(rows_lo, rows_hi, rhs, wide, start, c_lo, c_hi, b)


@njit(cache=True, nogil=True)
def insert_all(rows_lo, rows_hi, rhs, wide, starts, c_lo, c_hi, values):
    """Insert every row; returns (placed, redundant, first_failure_index).

    first_failure_index is -1 when all rows went in.
    """
    placed = 0
    redundant = 0
    for k in range(starts.shape[0]):
        ch = c_hi[k] if wide else _ZERO
        res = _insert_walk(rows_lo, rows_hi, rhs, wide, starts[k], c_lo[k], ch, values[k])
        if res == -2:
            return placed, redundant, k
        if res == -1:
            redundant += 1
        else:
            placed += 1
    return placed, redundant, -1


@njit(cache=True, nogil=True)
def build_buckets(
    rows_lo,
    rows_hi,
    rhs,
    wide,
    starts,
    c_lo,
    c_hi,
    values,
    pos,
    bounds,
    bucket_size,
    mode,
    lower,
    upper,
    default_t,
    meta,
    slot_of,
    bumped,
    exc_bucket,
    exc_threshold,
):
    """Per-bucket transactional insertion with threshold bumping.

    Keys must arrive sorted by (bucket, descending in-bucket position);
    ``bounds`` holds the first key index of each bucket (length nb + 1).
    On the first failed insertion in a bucket the smallest representable
    threshold covering the failure is chosen, every already-placed key
    below it is rolled back, and all keys below it are marked bumped.
    mode: 0 plain, 1 two-bit {0, lower, upper, all}, 2 one-bit plus
    exception list.  Returns the number of exception entries written.
    """
    nb = bounds.shape[0] - 1
    n_exc = 0
    for bucket in range(nb):
        first = bounds[bucket]
        last = bounds[bucket + 1]
        fail_at = -1
        for k in range(first, last):
            ch = c_hi[k] if wide else _ZERO
            res = _insert_walk(rows_lo, rows_hi, rhs, wide, starts[k], c_lo[k], ch, values[k])
            if res == -2:
                fail_at = k
                break
            slot_of[k] = res
        if fail_at < 0:
            meta[bucket] = 0
            continue

        k_fail = pos[fail_at]
        t_min = k_fail + 1
        if mode == 0:
            # direct threshold; top two values share one code meaning "all"
            if t_min > bucket_size - 2:
                t_star = bucket_size
                code = bucket_size - 1
            else:
                t_star = t_min
                code = t_min
        elif mode == 1:
            if t_min <= lower:
                t_star = lower
                code = 1
            elif t_min <= upper:
                t_star = upper
                code = 2
            else:
                t_star = bucket_size
                code = 3
        else:
            code = 1
            if t_min <= default_t:
                t_star = default_t
            else:
                t_star = t_min
                exc_bucket[n_exc] = bucket
                exc_threshold[n_exc] = t_star
                n_exc += 1
        meta[bucket] = code

        for k in range(first, fail_at):
            if pos[k] < t_star and slot_of[k] >= 0:
                s = slot_of[k]
                rows_lo[s] = _ZERO
                rhs[s] = _ZERO
                if wide:
                    rows_hi[s] = _ZERO
                slot_of[k] = -3
        for k in range(first, last):
            if pos[k] < t_star:
                bumped[k] = True
    return n_exc


@njit(cache=True, nogil=True)
def back_substitute(rows_lo, rows_hi, rhs, wide, z, fill_mult, r):
    """Solve bottom-up; free slots get (fill_mult * slot) mod 2^r."""
    m = rows_lo.shape[0]
    mask = _U(0xFFFFFFFFFFFFFFFF) if r == 64 else (_ONE << _U(r)) - _ONE
    fm = _U(fill_mult)
    for i in range(m - 1, -1, -1):
        if rows_lo[i] & _ONE == _ZERO:
            z[i] = (fm * _U(i)) & mask
            continue
        acc = rhs[i]
        c = rows_lo[i] >> _ONE
        jj = i + 1
        while c != _ZERO:
            t = _ctz64(c)
            jj += t
            acc ^= z[jj]
            jj += 1
            c >>= _U(t)
            c >>= _ONE
        if wide:
            c = rows_hi[i]
            jj = i + 64
            while c != _ZERO:
                t = _ctz64(c)
                jj += t
                acc ^= z[jj]
                jj += 1
                c >>= _U(t)
                c >>= _ONE
        z[i] = acc


@njit(cache=True, nogil=True)
def fill_interleaved(z, m, w, r, words_lo, words_hi, wide):
    """Scatter solution bits into blockwise bit-transposed words.

    Word ``u*r + j`` collects result bit j of slots u*w .. u*w + w - 1;
    slot i lands at bit position i mod w (high half in words_hi when the
    block width exceeds 64).
    """
    for i in range(m):
        u = i // w
        k = i - u * w
        v = z[i]
        if v == _ZERO:
            continue
        base = u * r
        if k < 64:
            sh = _U(k)
            for j in range(r):
                if (v >> _U(j)) & _ONE:
                    words_lo[base + j] |= _ONE << sh
        else:
            sh = _U(k - 64)
            for j in range(r):
                if (v >> _U(j)) & _ONE:
                    words_hi[base + j] |= _ONE << sh


@njit(inline="always")
def _query_narrow(words_lo, r, w, start, coeff):
    u = start // w
    o = start - u * w
    base = u * r
    res = _ZERO
    if o == 0:
        for j in range(r):
            res |= _parity64(words_lo[base + j] & coeff) << _U(j)
    else:
        sh = _U(o)
        sh2 = _U(w - o)
        for j in range(r):
            seg = (words_lo[base + j] >> sh) | (words_lo[base + r + j] << sh2)
            res |= _parity64(seg & coeff) << _U(j)
    return res


@njit(inline="always")
def _segment_wide(words_lo, words_hi, base, j, o, nxt):
    # bits [o, o+128) of the 256-bit concatenation of word j in block u
    # and block u+1 (nxt = base + r + j offset of the following block)
    lo_u = words_lo[base + j]
    hi_u = words_hi[base + j]
    lo_n = words_lo[nxt]
    hi_n = words_hi[nxt]
    if o == 0:
        return lo_u, hi_u
    if o < 64:
        sh = _U(o)
        sh2 = _U(64 - o)
        return (lo_u >> sh) | (hi_u << sh2), (hi_u >> sh) | (lo_n << sh2)
    if o == 64:
        return hi_u, lo_n
    sh = _U(o - 64)
    sh2 = _U(128 - o)
    return (hi_u >> sh) | (lo_n << sh2), (lo_n >> sh) | (hi_n << sh2)


@njit(inline="always")
def _query_wide(words_lo, words_hi, r, w, start, c_lo, c_hi):
    u = start // w
    o = start - u * w
    base = u * r
    res = _ZERO
    for j in range(r):
        seg_lo, seg_hi = _segment_wide(words_lo, words_hi, base, j, o, base + r + j)
        res |= _parity64((seg_lo & c_lo) ^ (seg_hi & c_hi)) << _U(j)
    return res


@njit(cache=True, nogil=True)
def query_one(words_lo, words_hi, r, w, wide, start, c_lo, c_hi):
    if wide:
        return _query_wide(words_lo, words_hi, r, w, start, c_lo, c_hi)
    return _query_narrow(words_lo, r, w, start, c_lo)


@njit(cache=True, nogil=True)
def query_many(words_lo, words_hi, r, w, wide, starts, c_lo, c_hi, out):
    if wide:
        for k in range(starts.shape[0]):
            out[k] = _query_wide(words_lo, words_hi, r, w, starts[k], c_lo[k], c_hi[k])
    else:
        for k in range(starts.shape[0]):
            out[k] = _query_narrow(words_lo, r, w, starts[k], c_lo[k])


@njit(cache=True, nogil=True)
def filter_check(words_lo, words_hi, r, w, wide, start, c_lo, c_hi, fingerprint):
    """Compare the query result against a fingerprint bit by bit.

    Evaluates result bits lazily and stops at the first mismatch.
    Returns (bits_examined << 1) | matched so callers can observe the
    early-exit behaviour without a second code path.
    """
    u = start // w
    o = start - u * w
    base = u * r
    if wide:
        for j in range(r):
            seg_lo, seg_hi = _segment_wide(words_lo, words_hi, base, j, o, base + r + j)
            bit = _parity64((seg_lo & c_lo) ^ (seg_hi & c_hi))
            if bit != (fingerprint >> _U(j)) & _ONE:
                return (j + 1) << 1
        return (r << 1) | 1
    if o == 0:
        for j in range(r):
            bit = _parity64(words_lo[base + j] & c_lo)
            if bit != (fingerprint >> _U(j)) & _ONE:
                return (j + 1) << 1
        return (r << 1) | 1
    sh = _U(o)
    sh2 = _U(w - o)
    for j in range(r):
        seg = (words_lo[base + j] >> sh) | (words_lo[base + r + j] << sh2)
        bit = _parity64(seg & c_lo)
        if bit != (fingerprint >> _U(j)) & _ONE:
            return (j + 1) << 1
    return (r << 1) | 1


@njit(cache=True, nogil=True)
def filter_check_many(words_lo, words_hi, r, w, wide, starts, c_lo, c_hi, fps, hits, bits):
    total_bits = 0
    for k in range(starts.shape[0]):
        ch = c_hi[k] if wide else _ZERO
        packed = filter_check(words_lo, words_hi, r, w, wide, starts[k], c_lo[k], ch, fps[k])
        hits[k] = packed & 1
        total_bits += packed >> 1
    bits[0] = total_bits


@njit(cache=True, nogil=True)
def fill_contiguous(z, r, bits):
    for i in range(z.shape[0]):
        p = i * r
        wd = p >> 6
        off = p & 63
        bits[wd] |= z[i] << _U(off)
        if off + r > 64:
            bits[wd + 1] |= z[i] >> _U(64 - off)


@njit(inline="always")
def _entry(bits, r, mask, idx):
    p = idx * r
    wd = p >> 6
    off = p & 63
    v = bits[wd] >> _U(off)
    if off + r > 64:
        v |= bits[wd + 1] << _U(64 - off)
    return v & mask


@njit(inline="always")
def _query_contiguous(bits, r, mask, start, c_lo, c_hi, wide):
    res = _ZERO
    c = c_lo
    j = 0
    while c != _ZERO:
        t = _ctz64(c)
        j += t
        res ^= _entry(bits, r, mask, start + j)
        j += 1
        c >>= _U(t)
        c >>= _ONE
    if wide:
        c = c_hi
        j = 64
        while c != _ZERO:
            t = _ctz64(c)
            j += t
            res ^= _entry(bits, r, mask, start + j)
            j += 1
            c >>= _U(t)
            c >>= _ONE
    return res


@njit(cache=True, nogil=True)
def query_contiguous_one(bits, r, wide, start, c_lo, c_hi):
    mask = _U(0xFFFFFFFFFFFFFFFF) if r == 64 else (_ONE << _U(r)) - _ONE
    return _query_contiguous(bits, r, mask, start, c_lo, c_hi, wide)


@njit(cache=True, nogil=True)
def query_contiguous_many(bits, r, wide, starts, c_lo, c_hi, out):
    mask = _U(0xFFFFFFFFFFFFFFFF) if r == 64 else (_ONE << _U(r)) - _ONE
    for k in range(starts.shape[0]):
        ch = c_hi[k] if wide else _ZERO
        out[k] = _query_contiguous(bits, r, mask, starts[k], c_lo[k], ch, wide)

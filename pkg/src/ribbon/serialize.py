"""Structure files: everything needed to answer queries after a reload.

Layout (all integers little-endian):

    magic "RBN1" | version u16 | kind u8 | flags u8 | seed u64 | n u64
    | constant count u8 | that many u64 derivation constants
    | kind-specific payload

kind: 1 standard, 2 homogeneous, 3 bumped.  flags bit 0 records whether
values are key fingerprints (filter mode), bit 1 whether keys came from
an external file rather than the seeded generator.  The derivation
constant table is stored verbatim and checked on load, so a file built
by a library with a different derivation scheme is rejected instead of
silently answering garbage.

Solution payloads are stored at their accounted width: interleaved words
take ceil(w/8) bytes each (guard block omitted, rebuilt on load),
contiguous payloads ceil(m*r/8) bytes, per-bucket threshold codes and
exception entries are bit-packed.  File size therefore tracks the space
report up to the fixed header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import hashing, storage
from .bumped import BumpedRibbon, BumpingLayer, BurrConfig, ThresholdMode
from .errors import TruncatedFile, VersionMismatch
from .homogeneous import HomogeneousFilter
from .standard import StandardRibbon

MAGIC = b"RBN1"
VERSION = 1

_KIND_IDS = {"standard": 1, "homog": 2, "burr": 3}
_KIND_NAMES = {v: k for k, v in _KIND_IDS.items()}
_MODE_IDS = {ThresholdMode.PLAIN: 0, ThresholdMode.TWO_BIT: 1, ThresholdMode.ONE_PLUS_BIT: 2}
_MODE_NAMES = {v: k for k, v in _MODE_IDS.items()}


@dataclass
class StoredStructure:
    kind: str
    seed: int
    n: int
    fingerprint_mode: bool
    external_keys: bool
    structure: StandardRibbon | HomogeneousFilter | BumpedRibbon


def kind_of(structure) -> str:
    if isinstance(structure, StandardRibbon):
        return "standard"
    if isinstance(structure, HomogeneousFilter):
        return "homog"
    if isinstance(structure, BumpedRibbon):
        return "burr"
    raise TypeError(f"not a storable structure: {type(structure)!r}")


# -- bit packing -------------------------------------------------------------


def pack_bits(values, width: int) -> bytes:
    acc = 0
    nbits = 0
    out = bytearray()
    for v in values:
        acc |= int(v) << nbits
        nbits += width
        while nbits >= 8:
            out.append(acc & 0xFF)
            acc >>= 8
            nbits -= 8
    if nbits:
        out.append(acc & 0xFF)
    return bytes(out)


def unpack_bits(data: bytes, width: int, count: int) -> list[int]:
    acc = 0
    nbits = 0
    pos = 0
    mask = (1 << width) - 1
    out = []
    for _ in range(count):
        while nbits < width:
            acc |= data[pos] << nbits
            pos += 1
            nbits += 8
        out.append(acc & mask)
        acc >>= width
        nbits -= width
    return out


def _pack_stream(items, widths) -> bytes:
    acc = 0
    nbits = 0
    out = bytearray()
    for item in items:
        for v, width in zip(item, widths):
            acc |= int(v) << nbits
            nbits += width
            while nbits >= 8:
                out.append(acc & 0xFF)
                acc >>= 8
                nbits -= 8
    if nbits:
        out.append(acc & 0xFF)
    return bytes(out)


def _unpack_stream(data: bytes, widths, count):
    acc = 0
    nbits = 0
    pos = 0
    out = []
    for _ in range(count):
        item = []
        for width in widths:
            while nbits < width:
                acc |= data[pos] << nbits
                pos += 1
                nbits += 8
            item.append(acc & ((1 << width) - 1))
            acc >>= width
            nbits -= width
        out.append(tuple(item))
    return out


def _words_to_bytes(words: np.ndarray, nbytes: int) -> bytes:
    raw = words.astype("<u8").view(np.uint8).reshape(-1, 8)[:, :nbytes]
    return raw.tobytes()


def _words_from_bytes(data: bytes, count: int, nbytes: int) -> np.ndarray:
    buf = np.zeros((count, 8), dtype=np.uint8)
    if count:
        buf[:, :nbytes] = np.frombuffer(data, dtype=np.uint8, count=count * nbytes).reshape(
            count, nbytes
        )
    return buf.view("<u8").ravel()


# -- cursor ------------------------------------------------------------------


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"needed {n} bytes at offset {self.pos}, file ends early")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))


# -- solution sections -------------------------------------------------------


def _write_solution(out: bytearray, sol) -> None:
    if isinstance(sol, storage.InterleavedSolution):
        out += struct.pack("<BQHH", 0, sol.m, sol.w, sol.r)
        payload = sol.num_blocks * sol.r
        if sol.wide:
            pair = np.empty((payload, 2), dtype=np.uint64)
            pair[:, 0] = sol.words_lo[:payload]
            pair[:, 1] = sol.words_hi[:payload]
            out += pair.astype("<u8").tobytes()
        else:
            out += _words_to_bytes(sol.words_lo[:payload], (sol.w + 7) // 8)
    elif isinstance(sol, storage.ContiguousSolution):
        out += struct.pack("<BQH", 1, sol.m, sol.r)
        nbytes = (sol.m * sol.r + 7) // 8
        out += sol.bits.astype("<u8").tobytes()[:nbytes]
    else:
        raise TypeError(f"unknown solution backend {type(sol)!r}")


def _read_solution(cur: _Cursor):
    (layout,) = cur.unpack("<B")
    if layout == 0:
        m, w, r = cur.unpack("<QHH")
        num_blocks = (m + w - 1) // w
        payload = num_blocks * r
        if w > 64:
            raw = np.frombuffer(cur.take(payload * 16), dtype="<u8").reshape(-1, 2)
            words_lo = np.zeros((num_blocks + 1) * r, dtype=np.uint64)
            words_hi = np.zeros((num_blocks + 1) * r, dtype=np.uint64)
            words_lo[:payload] = raw[:, 0]
            words_hi[:payload] = raw[:, 1]
            return storage.InterleavedSolution(m, w, r, words_lo, words_hi)
        nbytes = (w + 7) // 8
        words = np.zeros((num_blocks + 1) * r, dtype=np.uint64)
        words[:payload] = _words_from_bytes(cur.take(payload * nbytes), payload, nbytes)
        return storage.InterleavedSolution(m, w, r, words, None)
    if layout == 1:
        m, r = cur.unpack("<QH")
        nbytes = (m * r + 7) // 8
        n_words = (m * r + 63) // 64 + 1
        raw = cur.take(nbytes)
        bits = np.zeros(n_words, dtype=np.uint64)
        flat = np.zeros(n_words * 8, dtype=np.uint8)
        flat[: len(raw)] = np.frombuffer(raw, dtype=np.uint8)
        bits[:] = flat.view("<u8")
        return storage.ContiguousSolution(m, r, bits)
    raise VersionMismatch(f"unknown solution layout {layout}")


# -- standard section --------------------------------------------------------


def _write_standard(out: bytearray, sr: StandardRibbon) -> None:
    out += struct.pack(
        "<HHdQQQIB", sr.w, sr.r, sr.epsilon, sr.m, sr.n, sr.seed, sr.attempts, sr.hash_layer
    )
    _write_solution(out, sr.solution)


def _read_standard(cur: _Cursor) -> StandardRibbon:
    w, r, epsilon, m, n, seed, attempts, hash_layer = cur.unpack("<HHdQQQIB")
    sol = _read_solution(cur)
    return StandardRibbon(
        w=w,
        r=r,
        epsilon=epsilon,
        m=m,
        n=n,
        seed=seed,
        attempts=attempts,
        hash_layer=hash_layer,
        solution=sol,
    )


# -- top level ---------------------------------------------------------------


def save_structure(
    path: str,
    structure,
    *,
    seed: int,
    n: int,
    fingerprint_mode: bool = True,
    external_keys: bool = False,
) -> None:
    kind = kind_of(structure)
    out = bytearray()
    out += MAGIC
    flags = (1 if fingerprint_mode else 0) | (2 if external_keys else 0)
    out += struct.pack("<HBBQQ", VERSION, _KIND_IDS[kind], flags, seed & hashing.MASK64, n)
    consts = hashing.DERIVATION_CONSTANTS
    out += struct.pack("<B", len(consts))
    out += struct.pack(f"<{len(consts)}Q", *consts)

    if kind == "standard":
        _write_standard(out, structure)
    elif kind == "homog":
        hf: HomogeneousFilter = structure
        out += struct.pack("<HHdQQQQ", hf.w, hf.r, hf.epsilon, hf.m, hf.n, hf.seed, hf.redundant)
        _write_solution(out, hf.solution)
    else:
        br: BumpedRibbon = structure
        cfg = br.config
        out += struct.pack(
            "<HHdIBiii",
            cfg.w,
            cfg.r,
            cfg.epsilon,
            cfg.bucket_size,
            _MODE_IDS[cfg.mode],
            -1 if cfg.lower is None else cfg.lower,
            -1 if cfg.upper is None else cfg.upper,
            -1 if cfg.threshold is None else cfg.threshold,
        )
        out += struct.pack("<QQ", br.seed & hashing.MASK64, br.n)
        t_width = int(np.log2(cfg.bucket_size)) + 1
        for layer in br.layers:
            out += struct.pack(
                "<QQQQQ", layer.n_keys, layer.m, layer.num_buckets, layer.empty_slots, layer.redundant
            )
            out += pack_bits(layer.meta, cfg.meta_bits)
            out += struct.pack("<I", len(layer.exc_buckets))
            out += _pack_stream(
                zip(layer.exc_buckets, layer.exc_thresholds), (32, t_width)
            )
            _write_solution(out, layer.solution)
        _write_standard(out, br.final)

    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_structure(path: str) -> StoredStructure:
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data)
    magic = cur.take(4)
    if magic != MAGIC:
        raise VersionMismatch(f"bad magic {magic!r}; not a ribbon structure file")
    version, kind_id, flags, seed, n = cur.unpack("<HBBQQ")
    if version != VERSION:
        raise VersionMismatch(f"format version {version} not supported (expected {VERSION})")
    if kind_id not in _KIND_NAMES:
        raise VersionMismatch(f"unknown structure kind {kind_id}")
    (n_consts,) = cur.unpack("<B")
    consts = cur.unpack(f"<{n_consts}Q")
    if consts != hashing.DERIVATION_CONSTANTS:
        raise VersionMismatch("file was built with different derivation constants")

    kind = _KIND_NAMES[kind_id]
    if kind == "standard":
        structure = _read_standard(cur)
    elif kind == "homog":
        w, r, epsilon, m, hn, hseed, redundant = cur.unpack("<HHdQQQQ")
        sol = _read_solution(cur)
        structure = HomogeneousFilter(
            w=w, r=r, epsilon=epsilon, m=m, n=hn, seed=hseed, redundant=redundant, solution=sol
        )
    else:
        w, r, epsilon, bucket_size, mode_id, lower, upper, threshold = cur.unpack("<HHdIBiii")
        cfg = BurrConfig(
            w=w,
            r=r,
            epsilon=epsilon,
            bucket_size=bucket_size,
            mode=_MODE_NAMES[mode_id],
            lower=None if lower < 0 else lower,
            upper=None if upper < 0 else upper,
            threshold=None if threshold < 0 else threshold,
        )
        bseed, bn = cur.unpack("<QQ")
        t_width = int(np.log2(bucket_size)) + 1
        layers = []
        for li in range(3):
            n_keys, m, num_buckets, empty_slots, redundant = cur.unpack("<QQQQQ")
            meta_bytes = (num_buckets * cfg.meta_bits + 7) // 8
            meta = np.array(
                unpack_bits(cur.take(meta_bytes), cfg.meta_bits, num_buckets), dtype=np.int32
            )
            (n_exc,) = cur.unpack("<I")
            exc_bytes = (n_exc * (32 + t_width) + 7) // 8
            entries = _unpack_stream(cur.take(exc_bytes), (32, t_width), n_exc)
            sol = _read_solution(cur)
            layers.append(
                BumpingLayer(
                    layer_index=li,
                    m=m,
                    n_keys=n_keys,
                    num_buckets=num_buckets,
                    meta=meta,
                    exc_buckets=np.array([e[0] for e in entries], dtype=np.int64),
                    exc_thresholds=np.array([e[1] for e in entries], dtype=np.int32),
                    empty_slots=empty_slots,
                    redundant=redundant,
                    solution=sol,
                )
            )
        final = _read_standard(cur)
        structure = BumpedRibbon(cfg, bseed, layers, final, bn)

    return StoredStructure(
        kind=kind,
        seed=seed,
        n=n,
        fingerprint_mode=bool(flags & 1),
        external_keys=bool(flags & 2),
        structure=structure,
    )

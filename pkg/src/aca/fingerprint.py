"""Binary band-energy fingerprints, an inverted-index database and Hamming matching.

Format constants (frozen, tied to ``FORMAT_VERSION``):

* analysis frame: 2048 samples at 5512.5 Hz, i.e. 0.3715 s (16384 samples at 44.1 kHz)
* hop: 3.0 / 256 s, so 3 s of audio gives 256 sub-fingerprints = 8192 bits
* 33 log-spaced bands over 300-2000 Hz, 32 bits per frame
"""
from __future__ import annotations

import os
import struct
import threading
import zlib
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChecksumError,
    DatabaseError,
    DatabaseFormatError,
    DuplicateTrackError,
    ParameterError,
    VersionMismatchError,
)
from .signal import AudioBuffer, window_function

__all__ = [
    "FORMAT_VERSION",
    "FRAME_DURATION",
    "HOP_DURATION",
    "NUM_BANDS",
    "BLOCK_LEN",
    "Fingerprint",
    "FingerprintDB",
    "MatchResult",
    "extract_fingerprint",
    "hamming",
    "bit_error_rate",
    "db_add",
    "identify",
    "exhaustive_search",
    "db_save",
    "db_load",
]

FORMAT_VERSION = 1
FRAME_DURATION = 2048 / 5512.5
HOP_DURATION = 3.0 / 256
NUM_BANDS = 33
BAND_LOW, BAND_HIGH = 300.0, 2000.0
BLOCK_LEN = 256
MATCH_THRESHOLD = 0.35

_MAGIC_PREFIX = b"ACAFPDB"
_MAGIC = _MAGIC_PREFIX + str(FORMAT_VERSION).encode()
_BIT_WEIGHTS = (np.uint64(1) << np.arange(31, -1, -1, dtype=np.uint64)).astype(np.uint64)


@dataclass(frozen=True)
class Fingerprint:
    """One 32-bit sub-fingerprint per frame, ``frame_hop`` seconds apart."""

    subfingerprints: np.ndarray
    frame_hop: float = HOP_DURATION

    def __post_init__(self):
        words = np.array(self.subfingerprints, dtype=np.uint32)
        if words.ndim != 1:
            raise ParameterError("sub-fingerprints must be a flat sequence of 32-bit words")
        words.setflags(write=False)
        object.__setattr__(self, "subfingerprints", words)

    def __len__(self):
        return self.subfingerprints.shape[0]

    def __getitem__(self, item) -> "Fingerprint":
        if isinstance(item, slice):
            return Fingerprint(self.subfingerprints[item], self.frame_hop)
        return int(self.subfingerprints[item])

    @property
    def num_bits(self) -> int:
        return 32 * len(self)


@dataclass(frozen=True)
class MatchResult:
    track_id: str
    metadata: str
    offset: float
    offset_frames: int
    bit_error_rate: float

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "metadata": self.metadata,
            "offset": self.offset,
            "offset_frames": self.offset_frames,
            "bit_error_rate": self.bit_error_rate,
        }


# --------------------------------------------------------------------------
# Extraction


def _band_matrix(frame_len: int, sample_rate: int) -> np.ndarray:
    """(NUM_BANDS, num_bins) 0/1 matrix summing power bins into log-spaced bands."""
    freqs = np.fft.rfftfreq(frame_len, 1.0 / sample_rate)
    edges = np.geomspace(BAND_LOW, BAND_HIGH, NUM_BANDS + 1)
    M = np.zeros((NUM_BANDS, freqs.shape[0]))
    for m in range(NUM_BANDS):
        sel = (freqs >= edges[m]) & (freqs < edges[m + 1])
        if not sel.any():
            raise ParameterError(f"sample rate {sample_rate} Hz leaves fingerprint band {m} without bins")
        M[m, sel] = 1.0
    return M


def band_energies(buffer: AudioBuffer) -> np.ndarray:
    """Per-frame energies of the fingerprint bands, shape (num_frames, NUM_BANDS)."""
    sr = buffer.sample_rate
    frame_len = int(round(FRAME_DURATION * sr))
    n = len(buffer)
    if n < frame_len:
        raise ParameterError(
            f"buffer of {n} samples is shorter than one fingerprint frame ({frame_len} samples)")
    if sr * FRAME_DURATION < 2 * BAND_HIGH * FRAME_DURATION:
        raise ParameterError(f"sample rate {sr} Hz is too low for the {BAND_HIGH:.0f} Hz band edge")
    # ceil(n / hop) with hop = 3 sr / 256 samples, in exact integer arithmetic
    num_frames = -(-n * 256 // (3 * sr))
    starts = (np.arange(num_frames) * 3 * sr) // 256
    padded = np.zeros(int(starts[-1]) + frame_len)
    padded[:n] = buffer.samples
    idx = starts[:, None] + np.arange(frame_len)[None, :]
    frames = padded[idx] * window_function("hann", frame_len)
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return power @ _band_matrix(frame_len, sr).T


def _bits_from_energies(E: np.ndarray) -> np.ndarray:
    band_diff = E[:, :-1] - E[:, 1:]
    prev = np.vstack([np.zeros((1, band_diff.shape[1])), band_diff[:-1]])
    bits = (band_diff - prev) > 0
    return (bits.astype(np.uint64) @ _BIT_WEIGHTS).astype(np.uint32)


def extract_fingerprint(buffer: AudioBuffer) -> Fingerprint:
    """Sign of the time derivative of adjacent-band energy differences, 32 bits per frame.

    Bit ``m`` (most significant first) of frame ``n`` is set when
    ``(E[n, m] - E[n, m+1]) - (E[n-1, m] - E[n-1, m+1]) > 0``; frame 0 compares
    against zeros.
    """
    return Fingerprint(_bits_from_energies(band_energies(buffer)), HOP_DURATION)


# --------------------------------------------------------------------------
# Distances


def hamming(a: int, b: int) -> int:
    """Number of differing bits between two 32-bit words."""
    return ((int(a) ^ int(b)) & 0xFFFFFFFF).bit_count()


def _popcount_sum(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.bitwise_count(np.bitwise_xor(a, b)).sum())


def bit_error_rate(a, b) -> float:
    """Fraction of differing bits between two equally long word sequences."""
    a = np.asarray(a.subfingerprints if isinstance(a, Fingerprint) else a, dtype=np.uint32)
    b = np.asarray(b.subfingerprints if isinstance(b, Fingerprint) else b, dtype=np.uint32)
    if a.shape != b.shape or a.size == 0:
        raise ParameterError("bit error rate needs two non-empty sequences of equal length")
    return _popcount_sum(a, b) / (32.0 * a.size)


# --------------------------------------------------------------------------
# Database


class FingerprintDB:
    """Tracks plus an inverted index ``word -> [(track id, frame position), ...]``.

    Posting lists are served most popular track first (popularity = number of
    successful identifications), then in insertion order. Writes and
    popularity updates are serialized by a lock; lookups may run concurrently.
    """

    def __init__(self):
        self._tracks: dict[str, tuple[str, Fingerprint]] = {}
        self._index: dict[int, list[tuple[str, int]]] = defaultdict(list)
        self._popularity: dict[str, int] = {}
        self._order: dict[str, int] = {}
        self._lock = threading.RLock()

    def __len__(self):
        return len(self._tracks)

    def __contains__(self, track_id):
        return track_id in self._tracks

    @property
    def tracks(self) -> dict[str, tuple[str, Fingerprint]]:
        return dict(self._tracks)

    @property
    def popularity(self) -> dict[str, int]:
        return dict(self._popularity)

    def track_ids(self) -> list[str]:
        return list(self._tracks)

    def fingerprint(self, track_id: str) -> Fingerprint:
        return self._tracks[track_id][1]

    def metadata(self, track_id: str) -> str:
        return self._tracks[track_id][0]

    def index_keys(self) -> list[int]:
        return list(self._index)

    def num_postings(self) -> int:
        return sum(len(p) for p in self._index.values())

    def postings(self, word: int) -> list[tuple[str, int]]:
        plist = self._index.get(int(word), [])
        return sorted(plist, key=lambda p: (-self._popularity[p[0]], self._order[p[0]]))

    def add(self, track_id: str, metadata: str, fp: Fingerprint, popularity: int = 0) -> None:
        with self._lock:
            if track_id in self._tracks:
                raise DuplicateTrackError(f"track {track_id!r} already in database")
            self._tracks[track_id] = (metadata, fp)
            self._popularity[track_id] = int(popularity)
            self._order[track_id] = len(self._order)
            for pos, word in enumerate(fp.subfingerprints.tolist()):
                self._index[word].append((track_id, pos))

    def record_hit(self, track_id: str) -> None:
        with self._lock:
            self._popularity[track_id] += 1


def db_add(db: FingerprintDB, track_id: str, metadata: str, fp: Fingerprint) -> FingerprintDB:
    db.add(track_id, metadata, fp)
    return db


def _query_block(query: Fingerprint) -> np.ndarray:
    if len(query) == 0:
        raise ParameterError("empty query fingerprint")
    return query.subfingerprints[:BLOCK_LEN]


def _check_db(db: FingerprintDB):
    if len(db) == 0:
        raise DatabaseError("database is empty")


def exhaustive_search(db: FingerprintDB, query: Fingerprint):
    """Best (ber, track id, offset frames) over every track and every full alignment.

    Ties go to the earlier-inserted track, then the smaller offset. Returns
    ``None`` when no track is long enough to hold the query block.
    """
    _check_db(db)
    q = _query_block(query)
    B = q.shape[0]
    best = None
    for tid in db.track_ids():
        words = db.fingerprint(tid).subfingerprints
        if words.shape[0] < B:
            continue
        windows = np.lib.stride_tricks.sliding_window_view(words, B)
        errors = np.bitwise_count(windows ^ q[None, :]).sum(axis=1)
        off = int(np.argmin(errors))
        ber = float(errors[off]) / (32.0 * B)
        if best is None or ber < best[0]:
            best = (ber, tid, off)
    return best


def identify(db: FingerprintDB, query: Fingerprint, match_threshold: float = MATCH_THRESHOLD,
             fallback: bool = True) -> MatchResult | None:
    """Find the database position best matching the first block of ``query``.

    Every query word is looked up in the index; each hit proposes an alignment
    that is verified by the bit error rate over the block (256 words, or the
    whole query if shorter). Candidates are verified in posting order and the
    first one with the lowest BER wins. When no word hits the index and
    ``fallback`` is set, all alignments are scanned instead. Returns ``None``
    if the best BER exceeds ``match_threshold``; a match bumps the track's
    popularity.
    """
    _check_db(db)
    q = _query_block(query)
    B = q.shape[0]

    best = None
    seen: set[tuple[str, int]] = set()
    any_hit = False
    for qpos, word in enumerate(q.tolist()):
        for tid, pos in db.postings(word):
            any_hit = True
            off = pos - qpos
            if off < 0 or (tid, off) in seen:
                continue
            seen.add((tid, off))
            words = db.fingerprint(tid).subfingerprints
            if off + B > words.shape[0]:
                continue
            ber = _popcount_sum(words[off:off + B], q) / (32.0 * B)
            if best is None or ber < best[0]:
                best = (ber, tid, off)
        if best is not None and best[0] == 0.0:
            break

    if not any_hit and fallback:
        best = exhaustive_search(db, query)
    if best is None or best[0] > match_threshold:
        return None
    ber, tid, off = best
    db.record_hit(tid)
    hop = db.fingerprint(tid).frame_hop
    return MatchResult(tid, db.metadata(tid), off * hop, off, ber)


# --------------------------------------------------------------------------
# Persistence
#
# magic "ACAFPDB1" | u32 track count | per track:
#   u32 id length, UTF-8 id, u32 metadata length, UTF-8 metadata,
#   u32 word count, words (u32 each), u32 popularity
# | u32 CRC32 of everything before it.  All integers little-endian.


def db_save(db: FingerprintDB, path) -> None:
    parts = [_MAGIC, struct.pack("<I", len(db))]
    for tid in db.track_ids():
        meta, fp = db._tracks[tid]
        tid_b, meta_b = tid.encode("utf-8"), meta.encode("utf-8")
        parts += [struct.pack("<I", len(tid_b)), tid_b, struct.pack("<I", len(meta_b)), meta_b,
                  struct.pack("<I", len(fp)), fp.subfingerprints.astype("<u4").tobytes(),
                  struct.pack("<I", db.popularity[tid])]
    body = b"".join(parts)
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(body + struct.pack("<I", zlib.crc32(body)))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DatabaseFormatError("unexpected end of database body")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def db_load(path) -> FingerprintDB:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC) or data[:len(_MAGIC_PREFIX)] != _MAGIC_PREFIX:
        raise DatabaseFormatError(f"{path}: not a fingerprint database")
    if data[:len(_MAGIC)] != _MAGIC:
        raise VersionMismatchError(
            f"{path}: format version {data[len(_MAGIC_PREFIX):len(_MAGIC)]!r}, expected {FORMAT_VERSION}")
    if len(data) < len(_MAGIC) + 8:
        raise ChecksumError(f"{path}: file truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError(f"{path}: CRC32 mismatch (file truncated or corrupted)")

    r = _Reader(body)
    r.take(len(_MAGIC))
    db = FingerprintDB()
    for _ in range(r.u32()):
        tid = r.take(r.u32()).decode("utf-8")
        meta = r.take(r.u32()).decode("utf-8")
        count = r.u32()
        words = np.frombuffer(r.take(4 * count), dtype="<u4")
        db.add(tid, meta, Fingerprint(words), popularity=r.u32())
    if r.pos != len(body):
        raise DatabaseFormatError(f"{path}: {len(body) - r.pos} trailing bytes")
    return db

"""Deterministic, seeded randomness sources.

Every random quantity in this package (sign matrices, block-combination
signs, stable samples, phase angles, alphabet mappings) is a pure function
of ``(seed, stream_id, row, col)``.  The derivation is counter-based, so
individual entries can be regenerated lazily without materializing or
storing anything.

Derivation rule (bit-exact, also documented in the README):

1. ``label64(stream_id)``: an ``int`` stream id is used directly as an
   unsigned 64-bit value; a ``str`` id is hashed with
   ``blake2b(digest_size=8)`` and read as a little-endian uint64.
2. Stream key: ``blake2b(key=seed, person=domain, data=pack('<Q',
   label64), digest_size=16)``, read as two little-endian uint64 words
   keying Philox4x64-10.
3. Word ``w`` of row ``r`` is raw output ``w mod 4`` of the Philox block
   at counter ``(w // 4, r, 0, 0)`` (counter words listed least
   significant first).
4. Uniform ``w`` is ``(word_w + 0.5) / 2**64``, strictly inside (0, 1).
5. A sign at column ``c`` is ``+1`` if bit ``c % 64`` (least significant
   first) of word ``c // 64`` is zero, else ``-1``.
6. A stable sample at column ``c`` consumes uniforms ``2c`` and ``2c + 1``
   through the Chambers-Mallows-Stuck transform.
7. A phase angle for row ``r`` is ``2 * pi`` times uniform 0 of row ``r``.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np
from numpy.random import Philox

__all__ = [
    "Seed",
    "SignSource",
    "UniformSource",
    "StableSource",
    "PhaseSource",
    "sign_at",
    "stable_at",
]

_SEED_BYTES = 32
_PERSON_SEED = b"hs:seed:v1"


def _label64(stream_id: int | str) -> int:
    if isinstance(stream_id, str):
        digest = hashlib.blake2b(stream_id.encode("utf-8"), digest_size=8).digest()
        return struct.unpack("<Q", digest)[0]
    value = int(stream_id)
    if not 0 <= value < 1 << 64:
        raise ValueError(f"integer stream id out of uint64 range: {value}")
    return value


class Seed:
    """An opaque 256-bit seed."""

    __slots__ = ("value",)

    def __init__(self, value: bytes):
        if len(value) != _SEED_BYTES:
            raise ValueError(f"seed must be {_SEED_BYTES} bytes, got {len(value)}")
        self.value = bytes(value)

    @classmethod
    def from_hex(cls, text: str) -> "Seed":
        text = text.strip().lower()
        if len(text) != 2 * _SEED_BYTES:
            raise ValueError(f"seed hex must be {2 * _SEED_BYTES} characters, got {len(text)}")
        return cls(bytes.fromhex(text))

    @classmethod
    def from_int(cls, value: int) -> "Seed":
        return cls(int(value).to_bytes(_SEED_BYTES, "little", signed=False))

    @classmethod
    def from_any(cls, value: "Seed | int | str | bytes") -> "Seed":
        if isinstance(value, Seed):
            return value
        if isinstance(value, bytes):
            return cls(value)
        if isinstance(value, int):
            return cls.from_int(value)
        return cls.from_hex(value)

    def to_hex(self) -> str:
        return self.value.hex()

    def derive(self, label: str) -> "Seed":
        """A child seed, bound to a label (for independent sub-experiments)."""
        digest = hashlib.blake2b(
            label.encode("utf-8"), key=self.value, person=_PERSON_SEED, digest_size=_SEED_BYTES
        ).digest()
        return Seed(digest)

    def __eq__(self, other) -> bool:
        return isinstance(other, Seed) and self.value == other.value

    def __hash__(self) -> int:
        return hash(self.value)

    def __repr__(self) -> str:
        return f"Seed({self.value.hex()[:12]}...)"


class _WordSource:
    """Counter-addressed 64-bit words keyed by (seed, domain, stream_id).

    Rows live on separate counter lanes (counter word 1), so single
    entries are O(1) to regenerate and whole row ranges batch through one
    generator.
    """

    __slots__ = ("seed", "stream_id", "_key")

    def __init__(self, seed: Seed, stream_id: int | str, domain: bytes):
        if len(domain) > 16:
            raise ValueError("domain tag too long for blake2b person field")
        self.seed = seed
        self.stream_id = stream_id
        digest = hashlib.blake2b(
            struct.pack("<Q", _label64(stream_id)),
            key=seed.value,
            person=domain,
            digest_size=16,
        ).digest()
        self._key = np.frombuffer(digest, dtype=np.uint64)

    def words(self, row: int, lo: int, count: int) -> np.ndarray:
        if row < 0 or lo < 0 or count < 0:
            raise ValueError("word addresses must be nonnegative")
        if count == 0:
            return np.empty(0, dtype=np.uint64)
        counter = np.array([lo >> 2, row, 0, 0], dtype=np.uint64)
        skip = lo & 3
        return Philox(counter=counter, key=self._key).random_raw(skip + count)[skip:]

    def words_block(self, rows: int, lo: int, count: int) -> np.ndarray:
        """Words [lo, lo + count) for rows [0, rows), as a (rows, count) array."""
        if count == 0 or rows == 0:
            return np.empty((rows, count), dtype=np.uint64)
        skip = lo & 3
        blocks = (skip + count + 3) >> 2
        out = np.empty((rows, count), dtype=np.uint64)
        bg = Philox(counter=np.array([lo >> 2, 0, 0, 0], dtype=np.uint64), key=self._key)
        for r in range(rows):
            raw = bg.random_raw(4 * blocks)
            out[r] = raw[skip : skip + count]
            bg.advance((1 << 64) - blocks)  # next row lane, same column offset
        return out

    def uniforms(self, row: int, lo: int, count: int) -> np.ndarray:
        """Uniforms strictly inside (0, 1)."""
        w = self.words(row, lo, count)
        return (w.astype(np.float64) + 0.5) * (1.0 / 2.0**64)

    def uniforms_block(self, rows: int, lo: int, count: int) -> np.ndarray:
        w = self.words_block(rows, lo, count)
        return (w.astype(np.float64) + 0.5) * (1.0 / 2.0**64)


class UniformSource(_WordSource):
    """Uniform(0, 1) draws addressed by (row, index)."""

    def __init__(self, seed: Seed, stream_id: int | str = 0):
        super().__init__(seed, stream_id, b"hs:unif:v1")

    def uniform_at(self, row: int, index: int) -> float:
        return float(self.uniforms(row, index, 1)[0])


class SignSource:
    """Lazy +-1 variables addressed by (row, col).

    Backs both the sketching matrices and the per-block combination signs;
    one word of the underlying stream yields 64 sign bits.
    """

    __slots__ = ("seed", "stream_id", "_words")

    def __init__(self, seed: Seed, stream_id: int | str = 0):
        self.seed = seed
        self.stream_id = stream_id
        self._words = _WordSource(seed, stream_id, b"hs:sign:v1")

    def signs(self, row: int, lo: int, count: int) -> np.ndarray:
        """Signs for columns [lo, lo + count) of a row, as int8 in {-1, +1}."""
        if count == 0:
            return np.empty(0, dtype=np.int8)
        w_lo, w_hi = lo >> 6, (lo + count - 1 >> 6) + 1
        words = self._words.words(row, w_lo, w_hi - w_lo)
        bits = (words[:, None] >> np.arange(64, dtype=np.uint64)[None, :]) & np.uint64(1)
        flat = bits.reshape(-1)[lo - (w_lo << 6) : lo - (w_lo << 6) + count]
        return (1 - 2 * flat.astype(np.int8)).astype(np.int8)

    def sign_at(self, row: int, col: int) -> int:
        if row < 0 or col < 0:
            raise ValueError("sign indices must be nonnegative")
        return int(self.signs(row, col, 1)[0])

    def matrix(self, rows: int, cols: int, col_lo: int = 0) -> np.ndarray:
        """Dense (rows, cols) sign matrix; entry (r, c) equals sign_at(r, col_lo + c)."""
        if rows == 0 or cols == 0:
            return np.empty((rows, cols), dtype=np.int8)
        w_lo, w_hi = col_lo >> 6, (col_lo + cols - 1 >> 6) + 1
        words = self._words.words_block(rows, w_lo, w_hi - w_lo)
        bits = (words[:, :, None] >> np.arange(64, dtype=np.uint64)[None, None, :]) & np.uint64(1)
        flat = bits.reshape(rows, -1)
        off = col_lo - (w_lo << 6)
        return (1 - 2 * flat[:, off : off + cols].astype(np.int8)).astype(np.int8)


class StableSource:
    """Symmetric p-stable samples, p in (0, 2], via Chambers-Mallows-Stuck.

    Each sample consumes two uniforms.  At p = 2 the law is N(0, 2); at
    p = 1 it is standard Cauchy.
    """

    __slots__ = ("seed", "p", "stream_id", "_words")

    def __init__(self, seed: Seed, p: float, stream_id: int | str = 0):
        if not 0.0 < p <= 2.0:
            raise ValueError(f"stability parameter must be in (0, 2], got {p}")
        self.seed = seed
        self.p = float(p)
        self.stream_id = stream_id
        self._words = _WordSource(seed, stream_id, b"hs:stbl:v1")

    def row(self, row: int, col_lo: int, count: int) -> np.ndarray:
        u = self._words.uniforms(row, 2 * col_lo, 2 * count)
        return self._cms(u[0::2], u[1::2])

    def stable_at(self, row: int, col: int) -> float:
        if row < 0 or col < 0:
            raise ValueError("sample indices must be nonnegative")
        return float(self.row(row, col, 1)[0])

    def matrix(self, rows: int, cols: int, col_lo: int = 0) -> np.ndarray:
        u = self._words.uniforms_block(rows, 2 * col_lo, 2 * cols)
        return self._cms(u[:, 0::2], u[:, 1::2])

    def _cms(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        p = self.p
        theta = np.pi * (u1 - 0.5)
        w = -np.log(u2)
        if p == 1.0:
            return np.tan(theta)
        a = np.sin(p * theta) / np.cos(theta) ** (1.0 / p)
        b = (np.cos((1.0 - p) * theta) / w) ** ((1.0 - p) / p)
        return a * b


class PhaseSource:
    """Uniform angles in [0, 2*pi), one per row (used by segment sketches)."""

    __slots__ = ("seed", "stream_id", "_words")

    def __init__(self, seed: Seed, stream_id: int | str = 0):
        self.seed = seed
        self.stream_id = stream_id
        self._words = _WordSource(seed, stream_id, b"hs:phas:v1")

    def phases(self, rows: int) -> np.ndarray:
        return 2.0 * np.pi * self._words.uniforms_block(rows, 0, 1)[:, 0]


def sign_at(src: SignSource, row: int, col: int) -> int:
    return src.sign_at(row, col)


def stable_at(src: StableSource, row: int, col: int) -> float:
    return src.stable_at(row, col)

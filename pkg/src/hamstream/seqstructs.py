"""Approximate periods and interleaved run-length encodings.

The x-period of a string is the smallest shift ell > 1 at which the string
mismatches its shifted self in at most x positions.  A string whose
x-period is small compresses well under the ell-interleaved RLE below: one
run list per residue class mod ell, at most ell + x runs in total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["RleEncoding", "x_period", "rle_encode", "rle_decode", "rle_size"]


def _as_symbols(s) -> np.ndarray:
    if isinstance(s, np.ndarray):
        return s.astype(np.int64, copy=False)
    if isinstance(s, (bytes, bytearray)):
        return np.frombuffer(bytes(s), dtype=np.uint8).astype(np.int64)
    if isinstance(s, str):
        return np.array([ord(c) for c in s], dtype=np.int64)
    return np.asarray(s, dtype=np.int64)


def x_period(s, x: int) -> int:
    """Smallest shift ell in [2, n] whose self-overlap has at most x mismatches.

    The overlap convention is HD(S[0 : n-ell], S[ell : n]); the empty
    overlap at ell = n qualifies vacuously, so the result is total.
    """
    arr = _as_symbols(s)
    n = len(arr)
    if n < 2:
        raise ValueError("x_period needs a string of length >= 2")
    if x < 0:
        raise ValueError("x must be nonnegative")
    for ell in range(2, n):
        if int(np.count_nonzero(arr[: n - ell] != arr[ell:])) <= x:
            return ell
    return n


@dataclass
class RleEncoding:
    """Interleaved RLE: one ordered (symbol, count) run list per residue class."""

    ell: int
    total_len: int
    runs: list[list[tuple[int, int]]]

    def size(self) -> int:
        return sum(len(class_runs) for class_runs in self.runs)

    def bit_size(self, n_hint: int | None = None, sigma_hint: int = 256) -> int:
        """Serialized size in bits: a header plus (log n + log sigma) per run.

        Matches the documented byte layout: header (ell, total_len) as two
        length-width integers, then per-class run lists with a run count
        each.
        """
        n = max(self.total_len, 2) if n_hint is None else max(n_hint, 2)
        pos_bits = max(1, math.ceil(math.log2(n + 1)))
        sym_bits = max(1, math.ceil(math.log2(max(sigma_hint, 2))))
        header = 2 * pos_bits + self.ell * pos_bits
        return header + self.size() * (pos_bits + sym_bits)


def rle_encode(s, ell: int) -> RleEncoding:
    """Lossless deterministic encoding of s into ell interleaved run lists."""
    arr = _as_symbols(s)
    n = len(arr)
    if n == 0:
        raise ValueError("cannot encode an empty string")
    if not 1 <= ell <= n:
        raise ValueError(f"ell must be in [1, {n}], got {ell}")
    runs: list[list[tuple[int, int]]] = []
    for i in range(ell):
        cls = arr[i::ell]
        class_runs: list[tuple[int, int]] = []
        # boundaries of equal runs within the residue class
        change = np.flatnonzero(cls[1:] != cls[:-1]) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [len(cls)]))
        for a, b in zip(starts, ends):
            class_runs.append((int(cls[a]), int(b - a)))
        runs.append(class_runs)
    return RleEncoding(ell=ell, total_len=n, runs=runs)


def rle_decode(enc: RleEncoding) -> np.ndarray:
    """Exact inverse of rle_encode, as an int64 symbol array."""
    out = np.empty(enc.total_len, dtype=np.int64)
    filled = 0
    for i, class_runs in enumerate(enc.runs):
        cls = np.concatenate(
            [np.full(count, sym, dtype=np.int64) for sym, count in class_runs]
        ) if class_runs else np.empty(0, dtype=np.int64)
        expect = len(out[i :: enc.ell])
        if len(cls) != expect:
            raise ValueError(
                f"inconsistent encoding: class {i} decodes {len(cls)} symbols, expected {expect}"
            )
        out[i :: enc.ell] = cls
        filled += len(cls)
    if filled != enc.total_len:
        raise ValueError("inconsistent encoding: total length mismatch")
    return out


def rle_size(enc: RleEncoding) -> int:
    """Total run count across residue classes."""
    return enc.size()

"""Exact distance transforms used by index construction.

FFT-based counting over binary strings; results are exact integers
(magnitudes stay far below the float64 mantissa at supported sizes).
These back the fast paths of index construction and are cross-checked
against the naive oracle in tests.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "suffix_vs_prefix_distances",
    "suffix_vs_prefix_distances_batch",
    "prefix_vs_suffix_self_table",
]


def _fft_correlate_binary(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    """c[s] = sum_x t[x + s] * p[x] for shifts s in [0, len(t))."""
    n = len(t)
    size = 1
    while size < 2 * n:
        size <<= 1
    ft = np.fft.rfft(t, size)
    fp = np.fft.rfft(p, size)
    c = np.fft.irfft(ft * np.conj(fp), size)
    return np.rint(c[:n]).astype(np.int64)


def suffix_vs_prefix_distances(text: np.ndarray, pattern: np.ndarray, naive: bool = False) -> np.ndarray:
    """D[i] = HD(text[i:], pattern[: len - i]) for every suffix start i (0-based).

    text and pattern must be binary and of equal length; D has that length
    and D[i] compares overlaps of length len - i.
    """
    t = np.asarray(text, dtype=np.float64)
    p = np.asarray(pattern, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError("text and pattern must have equal length")
    n = len(t)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if naive or n < 32:
        ti = np.asarray(text)
        pi = np.asarray(pattern)
        return np.array(
            [int(np.count_nonzero(ti[i:] != pi[: n - i])) for i in range(n)], dtype=np.int64
        )
    ones = _fft_correlate_binary(t, p)
    zeros = _fft_correlate_binary(1.0 - t, 1.0 - p)
    overlap = n - np.arange(n, dtype=np.int64)
    return overlap - ones - zeros


def suffix_vs_prefix_distances_batch(texts: np.ndarray, patterns: np.ndarray) -> np.ndarray:
    """Row-wise suffix_vs_prefix_distances for (I, n) stacks."""
    t = np.asarray(texts, dtype=np.float64)
    p = np.asarray(patterns, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError("stacks must have equal shape")
    rows, n = t.shape
    if n == 0:
        return np.zeros((rows, 0), dtype=np.int64)
    size = 1
    while size < 2 * n:
        size <<= 1
    ft = np.fft.rfft(t, size, axis=1)
    fp = np.fft.rfft(p, size, axis=1)
    ones = np.rint(np.fft.irfft(ft * np.conj(fp), size, axis=1)[:, :n]).astype(np.int64)
    ft0 = np.fft.rfft(1.0 - t, size, axis=1)
    fp0 = np.fft.rfft(1.0 - p, size, axis=1)
    zeros = np.rint(np.fft.irfft(ft0 * np.conj(fp0), size, axis=1)[:, :n]).astype(np.int64)
    overlap = n - np.arange(n, dtype=np.int64)
    return overlap[None, :] - ones - zeros


def prefix_vs_suffix_self_table(pattern: np.ndarray, max_shift: int) -> np.ndarray:
    """Cumulative self-overlap mismatch counts.

    Row s - 1 (for shift s in [1, max_shift]) holds, at column L, the
    mismatch count between pattern[:L] and pattern[s-1 : s-1+L]; column 0
    is zero and rows are padded with the final value past the overlap end.
    """
    p = np.asarray(pattern)
    n = len(p)
    out = np.zeros((max_shift, n + 1), dtype=np.int64)
    for s in range(1, max_shift + 1):
        overlap = n - s + 1
        mism = (p[: overlap] != p[s - 1 : s - 1 + overlap]).astype(np.int64)
        np.cumsum(mism, out=out[s - 1, 1 : overlap + 1])
        out[s - 1, overlap + 1 :] = out[s - 1, overlap]
    return out

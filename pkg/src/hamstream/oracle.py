"""Brute-force ground truth.

Everything here is deliberately naive (quadratic sliding scans) and shares
no code with the sketching or streaming paths, so it can serve as the
independent oracle in every test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["hamming", "sliding_hamming", "OracleReport"]


def _as_array(s) -> np.ndarray:
    if isinstance(s, np.ndarray):
        return s
    if isinstance(s, (bytes, bytearray)):
        return np.frombuffer(bytes(s), dtype=np.uint8)
    if isinstance(s, str):
        return np.frombuffer(s.encode("latin-1"), dtype=np.uint8)
    return np.asarray(s)


def hamming(a, b) -> int:
    """Exact Hamming distance between two equal-length strings."""
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return int(np.count_nonzero(x != y))


def sliding_hamming(pattern, text) -> np.ndarray:
    """Exact distances of the pattern against every aligned text window.

    Returns len(text) - len(pattern) + 1 integers; O(n * m), clarity over
    speed.
    """
    p, t = _as_array(pattern), _as_array(text)
    n, m = len(p), len(t)
    if n > m:
        raise ValueError(f"pattern longer than text: {n} > {m}")
    out = np.empty(m - n + 1, dtype=np.int64)
    for i in range(m - n + 1):
        out[i] = np.count_nonzero(t[i : i + n] != p)
    return out


@dataclass
class OracleReport:
    """Per-alignment exact distances plus a few derived statistics."""

    distances: np.ndarray
    threshold: float | None = None
    minimum: int = field(init=False)
    argmin: int = field(init=False)
    count_at_most_threshold: int | None = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.distances)
        self.minimum = int(d.min())
        self.argmin = int(d.argmin())
        self.count_at_most_threshold = (
            int(np.count_nonzero(d <= self.threshold)) if self.threshold is not None else None
        )

    @classmethod
    def for_pair(cls, pattern, text, threshold: float | None = None) -> "OracleReport":
        return cls(sliding_hamming(pattern, text), threshold)

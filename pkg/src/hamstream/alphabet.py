"""Reductions from general alphabets to the binary engine.

Small constant alphabets: one-hot expansion, which exactly doubles the
Hamming distance.  Polynomial alphabets: a family of independent uniform
maps onto {0, 1}; for symbols that differ the mapped bits differ with
probability one half, so twice the average mapped distance estimates the
original distance, and each mapped pair streams through the binary engine.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import Seed, SignSource
from .streaming import StreamParams, StreamState, preprocess_pattern, push_symbol

__all__ = ["onehot_map", "BinaryMapFamily", "mapped_estimate", "stream_general"]


def onehot_map(s, sigma: int) -> np.ndarray:
    """Expand each symbol in [0, sigma) to its indicator block of length sigma."""
    arr = np.asarray(s, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= sigma):
        raise ValueError(f"symbols must lie in [0, {sigma})")
    out = np.zeros(len(arr) * sigma, dtype=np.int8)
    out[np.arange(len(arr)) * sigma + arr] = 1
    return out


class BinaryMapFamily:
    """Independent uniform 0/1 maps of an alphabet, derived from a seed."""

    def __init__(self, count: int, sigma: int, seed: Seed, stream_id: str = "alphabet-maps"):
        if count < 1:
            raise ValueError("need at least one map")
        self.count = int(count)
        self.sigma = int(sigma)
        source = SignSource(seed, stream_id)
        # row j holds map_j over the whole alphabet
        self.table = ((1 - source.matrix(self.count, self.sigma)) // 2).astype(np.int8)

    @classmethod
    def for_params(cls, eps: float, n: int, sigma: int, seed: Seed, c_k: float = 1.0) -> "BinaryMapFamily":
        count = max(1, math.ceil(c_k * (math.log2(n) ** 2) / (eps * eps)))
        return cls(count, sigma, seed)

    def map_string(self, j: int, s) -> np.ndarray:
        arr = np.asarray(s, dtype=np.int64)
        return self.table[j, arr]

    def map_all(self, s) -> np.ndarray:
        """(count, len) stack of every map applied to s."""
        arr = np.asarray(s, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.sigma):
            raise ValueError(f"symbols must lie in [0, {self.sigma})")
        return self.table[:, arr]


def mapped_estimate(per_map_distances) -> float:
    """Twice the mean mapped distance: unbiased under uniform maps."""
    vals = np.asarray(list(per_map_distances), dtype=np.float64)
    if vals.size == 0:
        raise ValueError("need at least one per-map distance")
    return 2.0 * float(vals.mean())


def _engine_eps(eps: float, n: int) -> float:
    """eps/3 when the block geometry admits it, else eps itself."""
    for candidate in (eps / 3.0, eps):
        try:
            StreamParams.create(n, candidate)
            return candidate
        except ValueError:
            continue
    raise ValueError(f"no feasible engine accuracy for n={n}, eps={eps}")


def stream_general(
    pattern,
    text,
    eps: float,
    seed: Seed,
    sigma: int,
    maps: int | None = None,
    c_k: float = 1.0,
):
    """Per-alignment estimates for a general-alphabet pattern/text pair.

    Runs one binary engine instance per map over the mapped inputs and
    aggregates with mapped_estimate.  Returns (estimates, family).
    """
    p = np.asarray(pattern, dtype=np.int64)
    t = np.asarray(text, dtype=np.int64)
    n = len(p)
    family = (
        BinaryMapFamily(maps, sigma, seed)
        if maps is not None
        else BinaryMapFamily.for_params(eps, n, sigma, seed)
    )
    eng_eps = _engine_eps(eps, n)
    mapped_patterns = family.map_all(p)
    index = preprocess_pattern(mapped_patterns, eng_eps, seed, instances=family.count)
    state = StreamState(index)
    out = []
    for sym in t:
        push_symbol(state, index, family.table[:, int(sym)])
        if state.last_estimates is not None:
            out.append(mapped_estimate(state.last_estimates))
    return np.asarray(out), family

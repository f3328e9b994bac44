"""Linear sketches of binary blocks and signed combinations of them.

A Sketcher projects a binary block of length up to B through a dense
+-1 matrix with r = 9 * k^2 rows, k = ceil(1/eps).  Squared L2 norms of
sketch differences, scaled by 1/r, are unbiased estimates of Hamming
distance; signed sums of block sketches summarize long substrings in one
r-vector with the same estimator.

A SegmentSketcher provides the complementary primitive for arbitrary
segments: complex unit-phase rows whose column weights are e^(i*theta*x)
for absolute position x.  Segment sketches are then phase rotations of
prefix-sum differences, so any (start, end) segment costs O(r) after one
linear pass, and re-based segments of equal length compare exactly like the
+-1 sketches.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .rng import PhaseSource, Seed, SignSource

__all__ = [
    "Sketcher",
    "Sketch",
    "SuperSketch",
    "DistanceEstimate",
    "SegmentSketcher",
    "sketch_block",
    "update_sketch",
    "combine_super",
    "estimate_distance",
    "median_amplify",
]


def rows_for_eps(eps: float) -> int:
    if not 0.0 < eps:
        raise ValueError(f"eps must be positive, got {eps}")
    k = max(2, int(np.ceil(1.0 / eps)))
    return 9 * k * k


@dataclass
class DistanceEstimate:
    value: float
    eps: float
    kind: str = "sketched"  # "exact" or "sketched"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("distance estimates are nonnegative")


class Sketcher:
    """Immutable projection through a seeded r x B sign matrix."""

    def __init__(self, eps: float, block_len: int, sign_source: SignSource):
        if block_len < 1:
            raise ValueError("block length must be positive")
        self.eps = float(eps)
        self.k = max(2, int(np.ceil(1.0 / eps)))
        self.rows = 9 * self.k * self.k
        self.block_len = int(block_len)
        self.source = sign_source
        self._matrix: np.ndarray | None = None

    @classmethod
    def from_seed(cls, eps: float, block_len: int, seed: Seed, stream_id: int | str = 0) -> "Sketcher":
        return cls(eps, block_len, SignSource(seed, stream_id))

    @property
    def provenance(self) -> tuple:
        return (self.rows, self.block_len, self.source.seed, self.source.stream_id)

    def matrix(self) -> np.ndarray:
        """The (rows, block_len) sign matrix; generated once, cached.

        Entries stay recomputable from the seed, so resident-space
        accounting charges only the seed, not the cache.
        """
        if self._matrix is None:
            self._matrix = self.source.matrix(self.rows, self.block_len)
        return self._matrix

    def column(self, j: int) -> np.ndarray:
        if not 0 <= j < self.block_len:
            raise ValueError(f"column {j} out of range [0, {self.block_len})")
        return self.matrix()[:, j]

    def zero_sketch(self) -> "Sketch":
        return Sketch(np.zeros(self.rows, dtype=np.int64), 0, self.provenance)


@dataclass
class Sketch:
    """Projection of one zero-padded block; entries bounded by the block length."""

    values: np.ndarray
    logical_len: int
    provenance: tuple | None = None

    def serialize(self) -> bytes:
        head = struct.pack("<qq", len(self.values), self.logical_len)
        return head + self.values.astype("<i8").tobytes()

    def bit_size(self) -> int:
        return 64 * (2 + len(self.values))


@dataclass
class SuperSketch:
    """Signed sum of consecutive block sketches."""

    values: np.ndarray
    block_count: int

    def bit_size(self) -> int:
        return 64 * (2 + len(self.values))


def _check_binary(block: np.ndarray):
    if block.size and (block.min() < 0 or block.max() > 1):
        raise ValueError("block symbols must be 0 or 1")


def sketch_block(s: Sketcher, block) -> Sketch:
    """Sketch of a block of length <= B, implicitly zero-padded to B."""
    arr = np.asarray(block, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("block must be one-dimensional")
    if len(arr) > s.block_len:
        raise ValueError(f"block length {len(arr)} exceeds {s.block_len}")
    _check_binary(arr)
    values = s.matrix()[:, : len(arr)].astype(np.int64) @ arr if len(arr) else np.zeros(
        s.rows, dtype=np.int64
    )
    return Sketch(values, len(arr), s.provenance)


def update_sketch(sk: Sketch, s: Sketcher, pos: int, bit: int) -> Sketch:
    """Extend a partial block sketch by one symbol at position pos.

    Equivalent to re-sketching the extended prefix; positions must arrive
    in order.
    """
    if pos != sk.logical_len:
        raise ValueError(f"out-of-order update: position {pos}, sketch has {sk.logical_len}")
    if pos >= s.block_len:
        raise ValueError("block already full")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    values = sk.values if bit == 0 else sk.values + s.column(pos)
    return Sketch(values.copy() if bit == 0 else values, sk.logical_len + 1, sk.provenance)


def combine_super(sketches, signs) -> SuperSketch:
    """Entrywise signed sum of equal-shape sketches from one sketcher."""
    sketches = list(sketches)
    signs = np.asarray(signs, dtype=np.int64)
    if len(sketches) != len(signs):
        raise ValueError(f"{len(sketches)} sketches but {len(signs)} signs")
    if not sketches:
        raise ValueError("need at least one sketch")
    prov = sketches[0].provenance
    for sk in sketches[1:]:
        if sk.provenance != prov:
            raise ValueError("sketches come from different sketchers")
    acc = np.zeros_like(sketches[0].values)
    for sk, sigma in zip(sketches, signs):
        acc += sigma * sk.values
    return SuperSketch(acc, len(sketches))


def estimate_distance(a, b, eps: float) -> DistanceEstimate:
    """Hamming-distance estimate from two sketch value vectors.

    The squared L2 norm of the difference, divided by the row count, is an
    unbiased estimate of the Hamming distance between the underlying
    strings.
    """
    av = np.asarray(a.values if isinstance(a, (Sketch, SuperSketch)) else a, dtype=np.float64)
    bv = np.asarray(b.values if isinstance(b, (Sketch, SuperSketch)) else b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError(f"sketch length mismatch: {av.shape} vs {bv.shape}")
    diff = av - bv
    return DistanceEstimate(float(diff @ diff) / len(av), eps, "sketched")


def median_amplify(estimates) -> float:
    """Lower median of independent estimates."""
    vals = sorted(float(v.value if isinstance(v, DistanceEstimate) else v) for v in estimates)
    if not vals:
        raise ValueError("median of an empty list")
    return vals[(len(vals) - 1) // 2]


class SegmentSketcher:
    """Complex unit-phase rows supporting O(r) sketches of any segment.

    For a symbol array s (1-based positions x), the prefix transform is
    Z[j] = sum_{x <= j} s[x] * exp(i * theta * x) per row.  The re-based
    sketch of segment [a, b] (columns 1..b-a+1) is
    exp(-i * theta * (a - 1)) * (Z[b] - Z[a-1]); the mean squared modulus
    of a difference of two re-based equal-length segment sketches is an
    unbiased Hamming distance estimate.
    """

    def __init__(self, rows: int, phase_source: PhaseSource):
        self.rows = int(rows)
        self.phases = phase_source.phases(self.rows)
        self.unit = np.exp(1j * self.phases)

    @classmethod
    def from_seed(cls, rows: int, seed: Seed, stream_id: int | str = 0) -> "SegmentSketcher":
        return cls(rows, PhaseSource(seed, stream_id))

    def prefix_transform(self, symbols) -> np.ndarray:
        """Complex prefix sums, shape (len + 1, rows); row 0 is zero."""
        arr = np.asarray(symbols, dtype=np.float64)
        weights = np.exp(1j * np.outer(np.arange(1, len(arr) + 1), self.phases))
        out = np.zeros((len(arr) + 1, self.rows), dtype=np.complex128)
        np.cumsum(weights * arr[:, None], axis=0, out=out[1:])
        return out

    def segment(self, prefix: np.ndarray, a: int, b: int) -> np.ndarray:
        """Re-based sketch of positions [a, b] (1-based, inclusive); empty if a > b."""
        if a > b:
            return np.zeros(self.rows, dtype=np.complex128)
        rot = np.exp(-1j * self.phases * (a - 1))
        return rot * (prefix[b] - prefix[a - 1])

    def estimate(self, s1: np.ndarray, s2: np.ndarray) -> float:
        d = s1 - s2
        return float(np.mean(d.real * d.real + d.imag * d.imag))

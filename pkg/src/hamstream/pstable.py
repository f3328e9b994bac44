"""Stable-distribution sketches for Hamming distance over general alphabets.

With stability parameter p at most eps / log2(sigma), the p-th power sum
of symbol differences is within a (1 + eps) factor of the Hamming
distance, and a linear sketch against p-stable samples estimates exactly
that power sum: the per-row absolute differences follow a stable law whose
scale is (sum |dx|^p)^(1/p), so

    estimate = (median_i |a_i - b_i| / scale)^p

maps the empirical median back to a Hamming count.  The scale constant
(the median absolute value of the standard p-stable law) is calibrated
empirically once per (p, m) and persisted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Seed, StableSource, UniformSource
from .sketch import DistanceEstimate

__all__ = [
    "PStableSketcher",
    "StableSketch",
    "CalibrationTable",
    "pstable_sketch",
    "pstable_estimate",
    "calibrate_scale",
]

# Floor on the stability parameter.  Below ~1/8 the sample tails exceed
# what float64 can carry through a difference of independently computed
# sketches: one huge row entry times the 1e-16 relative error of the
# subtraction swamps the median signal.  Estimation error from flooring is
# absorbed by the alphabet-matched calibration below.
P_FLOOR = 0.125

# Scales depend only on (p, m): they estimate the median |standard p-stable|
# seen through the estimator pipeline.  One batch per process, computed
# against a fixed calibration seed, is shared by all sketchers unless a
# caller supplies its own scale or table.
_CALIBRATION_SEED = Seed.from_int(0x9E3779B97F4A7C15)
_shared_table: "CalibrationTable | None" = None


def shared_calibration() -> "CalibrationTable":
    global _shared_table
    if _shared_table is None:
        _shared_table = CalibrationTable()
    return _shared_table


def stability_for(eps: float, sigma: int) -> float:
    """p <= eps / log2(sigma), floored at P_FLOOR for numerical stability."""
    if sigma < 2:
        raise ValueError("alphabet size must be at least 2")
    p = eps / max(1.0, math.log2(sigma))
    return float(min(2.0, max(P_FLOOR, p)))


def calibrate_scale(p: float, m: int, trials: int, seed: Seed, sigma: int = 2) -> float:
    """Empirical unit-distance scale for the median estimator.

    Each trial sketches a pair differing in exactly one position, the
    difference magnitude drawn uniformly from [1, sigma); the per-row
    absolute sketch difference is then that magnitude times a |standard
    p-stable| sample.  The scale is the median over trials of the
    per-trial medians, mirroring the estimator pipeline, so the typical
    |diff|^p inflation of the alphabet is normalized away.
    """
    if trials < 1000:
        raise ValueError(f"calibration needs at least 1000 trials, got {trials}")
    cal_seed = seed.derive("pstable-calibration")
    src = StableSource(cal_seed, p, "cal")
    # row t models trial t; m samples per trial
    meds = np.median(np.abs(src.matrix(trials, m)), axis=1)
    if sigma > 2:
        diffs = UniformSource(cal_seed, "cal-diff").uniforms(0, 0, trials)
        meds = meds * np.floor(1 + diffs * (sigma - 1))
    return float(np.median(meds))


class CalibrationTable:
    """Persisted scale constants keyed by (p, m, sigma).

    sigma enters the key because the unit-distance difference law it
    implies sets the normalization; (p, m) alone under-determine it.
    """

    def __init__(self, entries: dict[tuple[float, int, int], float] | None = None):
        self.entries = dict(entries or {})

    @staticmethod
    def _key(p: float, m: int, sigma: int) -> tuple[float, int, int]:
        return (round(float(p), 9), int(m), int(sigma))

    def get(self, p: float, m: int, sigma: int = 2) -> float | None:
        return self.entries.get(self._key(p, m, sigma))

    def put(self, p: float, m: int, scale: float, sigma: int = 2) -> None:
        self.entries[self._key(p, m, sigma)] = float(scale)

    def ensure(self, p: float, m: int, seed: Seed, trials: int = 2000, sigma: int = 2) -> float:
        scale = self.get(p, m, sigma)
        if scale is None:
            scale = calibrate_scale(p, m, trials, seed, sigma)
            self.put(p, m, scale, sigma)
        return scale

    def save(self, path: str | Path) -> None:
        rows = [
            {"p": p, "m": m, "sigma": sigma, "scale": scale}
            for (p, m, sigma), scale in sorted(self.entries.items())
        ]
        Path(path).write_text(json.dumps({"version": 1, "entries": rows}, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationTable":
        data = json.loads(Path(path).read_text())
        table = cls()
        for row in data["entries"]:
            table.put(row["p"], row["m"], row["scale"], row.get("sigma", 2))
        return table


@dataclass
class StableSketch:
    values: np.ndarray
    length: int
    offset: int
    p: float
    scale: float

    def bit_size(self) -> int:
        # (m, p, scale, values) with 64 bits per real
        return 64 * (3 + len(self.values))


class PStableSketcher:
    """Length-m stable projections of integer strings, shared-column."""

    def __init__(
        self,
        eps: float,
        sigma: int,
        seed: Seed,
        stream_id: int | str = "pstable",
        c_m: float = 64.0,
        p: float | None = None,
        scale: float | None = None,
        calibration_trials: int = 2000,
    ):
        if not 0 < eps:
            raise ValueError("eps must be positive")
        self.eps = float(eps)
        self.sigma = int(sigma)
        self.m = max(16, int(math.ceil(c_m / (eps * eps))))
        self.p = stability_for(eps, sigma) if p is None else float(p)
        if not 0.0 < self.p <= 2.0:
            raise ValueError(f"stability parameter out of range: {self.p}")
        self.source = StableSource(seed, self.p, stream_id)
        self._y: np.ndarray | None = None  # cached sample matrix, grown on demand
        if scale is not None:
            self.scale = float(scale)
        else:
            self.scale = shared_calibration().ensure(
                self.p, self.m, _CALIBRATION_SEED, trials=calibration_trials, sigma=self.sigma
            )

    def samples(self, cols: int) -> np.ndarray:
        """The (m, cols) sample matrix; cached and grown as needed."""
        if self._y is None or self._y.shape[1] < cols:
            grow = max(cols, 2 * (0 if self._y is None else self._y.shape[1]))
            self._y = self.source.matrix(self.m, grow)
        return self._y[:, :cols]

    def sketch(self, x, offset: int = 0) -> StableSketch:
        arr = np.asarray(x, dtype=np.float64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.sigma):
            raise ValueError(f"symbols must lie in [0, {self.sigma})")
        y = self.samples(offset + len(arr))[:, offset : offset + len(arr)]
        values = y @ arr if len(arr) else np.zeros(self.m, dtype=np.float64)
        return StableSketch(values, len(arr), offset, self.p, self.scale)

    def sketch_windows(self, text, starts: np.ndarray, length: int, offset: int = 0) -> np.ndarray:
        """Sketch values of text[s : s + length] for every s, as (m, len(starts))."""
        arr = np.asarray(text, dtype=np.float64)
        windows = np.lib.stride_tricks.sliding_window_view(arr, length)[starts]
        y = self.samples(offset + length)[:, offset : offset + length]
        return y @ windows.T

    def estimate_values(self, a: np.ndarray, b: np.ndarray) -> float:
        med = float(np.median(np.abs(a - b)))
        return (med / self.scale) ** self.p if med > 0 else 0.0


def pstable_sketch(s: PStableSketcher, x, offset: int = 0) -> StableSketch:
    return s.sketch(x, offset)


def pstable_estimate(a: StableSketch, b: StableSketch) -> DistanceEstimate:
    """Median-based Hamming estimate from two aligned stable sketches."""
    if len(a.values) != len(b.values):
        raise ValueError("sketch width mismatch")
    if a.offset != b.offset:
        raise ValueError(f"offset mismatch: {a.offset} vs {b.offset}")
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    if (a.p, a.scale) != (b.p, b.scale):
        raise ValueError("sketches calibrated differently")
    med = float(np.median(np.abs(a.values - b.values)))
    value = (med / a.scale) ** a.p if med > 0 else 0.0
    return DistanceEstimate(value, a.p, "sketched")

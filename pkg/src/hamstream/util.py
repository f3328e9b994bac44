"""Shared helpers for accuracy accounting and scaling fits."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["within_factor", "within_fraction", "fit_constants", "rel_error"]


def within_factor(estimate: float, true: float, factor: float) -> bool:
    """True when estimate lies in [true / factor, true * factor].

    A zero true distance demands an (effectively) zero estimate, matching
    the multiplicative guarantee.
    """
    if true == 0:
        return bool(abs(estimate) < 1e-9)
    if estimate <= 0:
        return False
    return bool(true / factor - 1e-12 <= estimate <= true * factor + 1e-12)


def within_fraction(estimates, truths, factor: float) -> float:
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    if est.shape != tru.shape:
        raise ValueError("shape mismatch")
    hits = sum(within_factor(e, t, factor) for e, t in zip(est, tru))
    return float(hits / len(est)) if len(est) else 1.0


def rel_error(estimate: float, true: float) -> float:
    return (estimate - true) / max(true, 1.0)


def fit_constants(measured, predicted) -> tuple[np.ndarray, float]:
    """Per-cell fitted constants and their max/min stability ratio."""
    m = np.asarray(measured, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if m.shape != p.shape or not len(m):
        raise ValueError("need matching non-empty arrays")
    c = m / p
    return c, float(c.max() / c.min())


def log2ceil(value: int) -> int:
    return max(1, math.ceil(math.log2(value + 1)))

"""Anchored prefix-distance index over a text against a shared pattern.

The index answers, for any alignment i, an estimate of the Hamming
distance between the pattern prefix and text[i:].  Construction picks, per
level j, the leftmost anchor position whose suffix-vs-prefix distance is
at most k^(j+1), splits the text right of the anchor into at most k^2
blocks carrying at most k^(j-1) mismatches each (against the pattern
aligned at the anchor), and sketches the text suffix at every block
border.  A query splits at the nearest border right of i: left of the
border the pattern-at-anchor substitutes for the text (cost bounded by the
block's mismatch budget), right of it a sketch difference estimates the
rest.  Alignments whose distance is at most k^2 are carried exactly.

Two modes share the machinery:

* protocol mode: +-1 suffix sketches; the pattern is materially available
  at query time, so the left part is compared symbol by symbol.
* stream mode (built per text block against the pattern's first block):
  phase segment sketches on the text side, rotated prefix-sum differences
  on the pattern side, and the left part answered from a precomputed
  prefix-length table, so a query costs O(rows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convdist import suffix_vs_prefix_distances
from .sketch import DistanceEstimate, SegmentSketcher, Sketcher

__all__ = [
    "PrefixLengthTable",
    "Anchor",
    "PrefixIndex",
    "build_prefix_index",
    "build_block_index",
    "query_prefix_distance",
    "query_all_protocol",
]


def default_k(eps: float) -> int:
    return max(2, int(math.ceil(6.0 / eps)))


def _levels(k: int, n: int) -> int:
    """floor(log_k n) by integer powers."""
    q, power = 0, 1
    while power * k <= n:
        power *= k
        q += 1
    return q


@dataclass
class PrefixLengthTable:
    """Maximal prefix lengths under staged self-overlap distance thresholds.

    Row s - 1 column t holds the longest L such that
    HD(pattern[:L], pattern[s-1 : s-1+L]) <= thresholds[t]; thresholds are
    0, 1, (1+eps), (1+eps)^2, ... so a lookup overestimates the true
    distance by at most a (1+eps) factor and is exact at zero.
    """

    eps: float
    thresholds: np.ndarray
    max_len: np.ndarray

    @classmethod
    def build(cls, pattern, eps: float, max_shift: int) -> "PrefixLengthTable":
        p = np.asarray(pattern)
        n = len(p)
        levels = int(math.floor(math.log(n) / math.log1p(eps))) if n > 1 else 0
        thr = np.concatenate(([0.0], (1.0 + eps) ** np.arange(levels + 1)))
        if thr[-1] < n:
            thr = np.append(thr, float(n))
        max_len = np.empty((max_shift, len(thr)), dtype=np.int64)
        for s in range(1, max_shift + 1):
            overlap = n - s + 1
            mism = (p[:overlap] != p[s - 1 : s - 1 + overlap]).astype(np.int64)
            cum = np.cumsum(mism)
            # longest L with cum[L - 1] <= thr, i.e. rightmost index kept
            max_len[s - 1] = np.searchsorted(cum, thr + 1e-9, side="left")
        return cls(eps, thr, max_len)

    def query(self, shift: int, length: int) -> float:
        """Smallest threshold whose maximal length covers `length`."""
        if length <= 0:
            return 0.0
        row = self.max_len[shift - 1]
        t = int(np.searchsorted(row, length, side="left"))
        if t >= len(row):
            t = len(row) - 1
        return float(self.thresholds[t])

    def bit_size(self) -> int:
        top = int(self.max_len.max(initial=1))
        n_bits = max(1, math.ceil(math.log2(top + 2)))
        return self.max_len.size * n_bits


@dataclass
class Anchor:
    level: int
    position: int
    borders: np.ndarray
    pad_borders: int = 0
    sketches: np.ndarray | None = None  # (n_borders, r) int64, protocol mode
    phase_sketches: np.ndarray | None = None  # (n_borders, r) complex128, stream mode


@dataclass
class PrefixIndex:
    mode: str
    n: int
    k: int
    q: int
    eps: float
    anchors: list[Anchor]
    exceptions: dict[int, int]
    sketcher: Sketcher | None = None
    seg: SegmentSketcher | None = None
    distances: np.ndarray | None = field(default=None, repr=False)  # debug only

    def governing_anchor(self, i: int) -> Anchor | None:
        """The anchor closest to i from the left (ties to the coarsest level)."""
        best = None
        for anchor in self.anchors:  # levels ascending, positions non-increasing
            if anchor.position <= i:
                if best is None or anchor.position > best.position:
                    best = anchor
        return best

    def bit_size(self) -> int:
        pos_bits = max(1, math.ceil(math.log2(self.n + 2)))
        val_bits = max(1, math.ceil(math.log2(self.k * self.k + 1)))
        total = 4 * 32
        for anchor in self.anchors:
            slots = len(anchor.borders) + anchor.pad_borders
            total += pos_bits + slots * pos_bits
            if anchor.sketches is not None:
                rows = anchor.sketches.shape[1]
                total += slots * 64 * (2 + rows)
            elif anchor.phase_sketches is not None:
                rows = anchor.phase_sketches.shape[1]
                total += slots * 128 * rows
        total += len(self.exceptions) * (pos_bits + val_bits)
        return total


def _greedy_borders(position: int, mismatch_pos: np.ndarray, per_block: int) -> np.ndarray:
    """Block starts: a new block opens after every `per_block`-th mismatch."""
    if len(mismatch_pos) == 0:
        return np.array([position], dtype=np.int64)
    cuts = mismatch_pos[per_block::per_block]
    return np.concatenate(([position], cuts)).astype(np.int64)


def _select_anchors(distances: np.ndarray, k: int, q: int) -> list[tuple[int, int]]:
    """(level, leftmost qualifying position) for levels with a qualifying position."""
    out = []
    for j in range(1, q + 1):
        threshold = k ** (j + 1)
        qualifying = np.flatnonzero(distances <= threshold)
        if len(qualifying):
            out.append((j, int(qualifying[0]) + 1))
    positions = [pos for _, pos in out]
    assert positions == sorted(positions, reverse=True), "anchor positions must be non-increasing"
    return out


def build_prefix_index(
    text_half,
    pattern,
    eps: float,
    sketcher: Sketcher,
    k: int | None = None,
    distances: np.ndarray | None = None,
    keep_distances: bool = False,
) -> PrefixIndex:
    """Protocol-mode index over a text half, sketched with +-1 projections."""
    t = np.asarray(text_half, dtype=np.int8)
    p = np.asarray(pattern, dtype=np.int8)
    if t.shape != p.shape:
        raise ValueError("text half and pattern must have equal length")
    n = len(t)
    k = default_k(eps) if k is None else int(k)
    q = _levels(k, n)
    if distances is None:
        distances = suffix_vs_prefix_distances(t, p)
    exceptions = {
        int(i) + 1: int(distances[i]) for i in np.flatnonzero(distances <= k * k)
    }
    mf = sketcher.matrix().astype(np.float64)
    tf = t.astype(np.float64)
    anchors = []
    for level, position in _select_anchors(distances, k, q):
        span = slice(position - 1, n)
        mism = np.flatnonzero(t[span] != p[: n - position + 1]) + position  # 1-based
        borders = _greedy_borders(position, mism, k ** (level - 1))
        if len(borders) > k * k:
            raise AssertionError("greedy partition exceeded the block budget")
        suffixes = np.zeros((len(borders), n), dtype=np.float64)
        for idx, b in enumerate(borders):
            suffixes[idx, : n - b + 1] = tf[b - 1 :]
        sketches = np.rint(suffixes @ mf.T).astype(np.int64)
        anchors.append(
            Anchor(
                level=level,
                position=position,
                borders=borders,
                pad_borders=k * k - len(borders),
                sketches=sketches,
            )
        )
    return PrefixIndex(
        mode="protocol",
        n=n,
        k=k,
        q=q,
        eps=eps,
        anchors=anchors,
        exceptions=exceptions,
        sketcher=sketcher,
        distances=distances if keep_distances else None,
    )


def build_block_index(
    block,
    pattern_block,
    eps: float,
    k: int,
    seg: SegmentSketcher,
    distances: np.ndarray | None = None,
) -> PrefixIndex:
    """Stream-mode index of one text block against the pattern's first block."""
    t = np.asarray(block, dtype=np.int8)
    p = np.asarray(pattern_block, dtype=np.int8)
    if t.shape != p.shape:
        raise ValueError("block and pattern block must have equal length")
    n = len(t)
    q = max(1, math.ceil(math.log(n) / math.log(k))) if n > 1 else 1
    if distances is None:
        distances = suffix_vs_prefix_distances(t, p)
    exceptions = {
        int(i) + 1: int(distances[i]) for i in np.flatnonzero(distances <= k * k)
    }
    zb = seg.prefix_transform(t)
    anchors = []
    for level, position in _select_anchors(distances, k, q):
        mism = np.flatnonzero(t[position - 1 :] != p[: n - position + 1]) + position
        borders = _greedy_borders(position, mism, k ** (level - 1))
        if len(borders) > k * k:
            raise AssertionError("greedy partition exceeded the block budget")
        phase = np.empty((len(borders), seg.rows), dtype=np.complex128)
        for idx, b in enumerate(borders):
            phase[idx] = seg.segment(zb, b, n)
        anchors.append(
            Anchor(
                level=level,
                position=position,
                borders=borders,
                pad_borders=0,
                phase_sketches=phase,
            )
        )
    return PrefixIndex(
        mode="stream",
        n=n,
        k=k,
        q=q,
        eps=eps,
        anchors=anchors,
        exceptions=exceptions,
        seg=seg,
    )


def query_all_protocol(idx: PrefixIndex, pattern) -> np.ndarray:
    """Vectorized protocol-mode estimates for every alignment i in [1, n].

    Matches query_prefix_distance element for element; borders are grouped
    so the pattern-side sketches batch into one matrix product per border.
    """
    p = np.asarray(pattern)
    pf = p.astype(np.float64)
    n = idx.n
    out = np.full(n, np.nan)
    for i, val in idx.exceptions.items():
        out[i - 1] = float(val)
    mf = idx.sketcher.matrix().astype(np.float64)
    shrink = 1.0 - idx.eps / 3.0
    hi = n  # upper end of the region the next anchor governs
    for anchor in idx.anchors:
        todo = [
            i
            for i in range(anchor.position, hi + 1)
            if i not in idx.exceptions
        ]
        hi = min(hi, anchor.position - 1)
        if not todo:
            continue
        todo = np.asarray(todo, dtype=np.int64)
        border_idx = np.searchsorted(anchor.borders, todo, side="left")
        h1 = np.empty(len(todo))
        for t, i in enumerate(todo):
            b = anchor.borders[border_idx[t]] if border_idx[t] < len(anchor.borders) else n + 1
            L = int(b - i)
            s = int(i - anchor.position)
            h1[t] = np.count_nonzero(p[:L] != p[s : s + L])
        h2 = np.zeros(len(todo))
        for bi in np.unique(border_idx):
            group = np.flatnonzero(border_idx == bi)
            if bi >= len(anchor.borders):
                continue  # sentinel border, empty right part
            b = int(anchor.borders[bi])
            L = n - b + 1
            starts = (b - todo[group]).astype(np.int64)  # 0-based window starts in p
            windows = np.lib.stride_tricks.sliding_window_view(pf, L)[starts]
            sk_p = np.rint(windows @ mf[:, :L].T).astype(np.int64)
            diff = (anchor.sketches[bi][None, :] - sk_p).astype(np.float64)
            h2[group] = np.einsum("ij,ij->i", diff, diff) / idx.sketcher.rows
        out[todo - 1] = (h1 + h2) / shrink
    if np.isnan(out).any():
        raise LookupError("uncovered alignments remain")
    return out


def query_prefix_distance(
    idx: PrefixIndex,
    i: int,
    pattern=None,
    prefix_len_table: PrefixLengthTable | None = None,
    pattern_phases: np.ndarray | None = None,
) -> DistanceEstimate:
    """Estimate of HD(text[i:], pattern prefix of the matching length).

    Protocol mode needs the pattern itself; stream mode needs the
    prefix-length table plus the pattern block's phase prefix transform.
    """
    n = idx.n
    if not 1 <= i <= n:
        raise ValueError(f"alignment {i} out of [1, {n}]")
    if i in idx.exceptions:
        return DistanceEstimate(float(idx.exceptions[i]), idx.eps, "exact")
    anchor = idx.governing_anchor(i)
    if anchor is None:
        raise LookupError(f"no anchor governs alignment {i} and it is not an exception")
    pos = int(np.searchsorted(anchor.borders, i, side="left"))
    border = int(anchor.borders[pos]) if pos < len(anchor.borders) else n + 1
    left_len = border - i
    shift = i - anchor.position + 1
    if idx.mode == "protocol":
        if pattern is None:
            raise ValueError("protocol-mode queries need the pattern")
        p = np.asarray(pattern)
        h1 = float(np.count_nonzero(p[:left_len] != p[shift - 1 : shift - 1 + left_len]))
        if border <= n:
            win = p[border - i : n - i + 1].astype(np.float64)
            sk_p = np.rint(
                idx.sketcher.matrix()[:, : len(win)].astype(np.float64) @ win
            ).astype(np.int64)
            diff = (anchor.sketches[pos] - sk_p).astype(np.float64)
            h2 = float(diff @ diff) / idx.sketcher.rows
        else:
            h2 = 0.0
    else:
        if prefix_len_table is None or pattern_phases is None:
            raise ValueError("stream-mode queries need the table and pattern phases")
        h1 = prefix_len_table.query(shift, left_len)
        if border <= n:
            pat_seg = idx.seg.segment(pattern_phases, border - i + 1, n - i + 1)
            h2 = idx.seg.estimate(anchor.phase_sketches[pos], pat_seg)
        else:
            h2 = 0.0
    return DistanceEstimate((h1 + h2) / (1.0 - idx.eps / 3.0), idx.eps, "sketched")

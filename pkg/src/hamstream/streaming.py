"""Streaming sliding-window Hamming distance with worst-case symbol cost.

The pattern is preprocessed into: its first block verbatim, a signed
super-sketch of every window-length-minus-a-block substring, padded
sketches of its last-block suffixes, a prefix-length table for self-overlap
lookups, and the phase prefix transform of the first block.  The text is
consumed in blocks of length B = k * ceil(sqrt(n)); per arriving symbol
the engine updates the current block sketch, drains a step-budgeted task
queue (the rolling super-sketch summation and the per-block prefix index
construction, both de-amortized over the following block), and emits

    H_p + H_m + H_s

for the alignment ending at the symbol: the prefix part answered by the
previous window-start block's index, the middle part by the rolling
super-sketch against the stored pattern super-sketch at the matching
offset, and the suffix part by the padded suffix sketch against the
current partial block sketch.

Several independent instances (separate randomness, shared or per-instance
patterns) run vectorized inside one state; the emitted value sums the
per-part lower medians across instances.  Step and bit instrumentation is
per instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convdist import suffix_vs_prefix_distances_batch
from .prefix_index import PrefixIndex, PrefixLengthTable, build_block_index, query_prefix_distance
from .rng import PhaseSource, Seed, SignSource
from .sketch import SegmentSketcher

__all__ = [
    "StreamParams",
    "PatternIndex",
    "StreamState",
    "preprocess_pattern",
    "push_symbol",
    "finalize_block",
    "space_report",
    "space_formula",
    "HammingStream",
]


@dataclass(frozen=True)
class StreamParams:
    n: int
    eps: float
    k: int
    block_len: int
    rows: int
    blocks_per_window: int
    instances: int
    large_skip_threshold: float

    @classmethod
    def create(
        cls,
        n: int,
        eps: float,
        instances: int = 1,
        large_skip_threshold: float | None = None,
    ) -> "StreamParams":
        if n < 4:
            raise ValueError("pattern length must be at least 4")
        if not 0 < eps:
            raise ValueError("eps must be positive")
        k = max(2, math.ceil(1.0 / eps))
        root = math.isqrt(n)
        ceil_root = root if root * root == n else root + 1
        B = k * ceil_root
        if n % B != 0 or n // B < 2:
            raise ValueError(
                f"need the block length {B} to divide n with at least two blocks; "
                f"n={n}, eps={eps} (k={k}) does not qualify"
            )
        return cls(
            n=n,
            eps=eps,
            k=k,
            block_len=B,
            rows=9 * k * k,
            blocks_per_window=n // B,
            instances=instances,
            large_skip_threshold=(
                2.0 * B / eps if large_skip_threshold is None else large_skip_threshold
            ),
        )


class _PhaseBank:
    """Per-instance phase rows with batched prefix transforms and segments."""

    def __init__(self, phases: np.ndarray):
        self.phases = phases  # (I, rows)

    def prefix_transform(self, symbols: np.ndarray) -> np.ndarray:
        """(I, len + 1, rows) complex prefix sums of per-instance symbols."""
        inst, length = symbols.shape
        pos = np.arange(1, length + 1)
        weights = np.exp(1j * pos[None, :, None] * self.phases[:, None, :])
        out = np.zeros((inst, length + 1, self.phases.shape[1]), dtype=np.complex128)
        np.cumsum(weights * symbols[:, :, None], axis=1, out=out[:, 1:])
        return out

    def segment(self, prefix: np.ndarray, a: int, b: int) -> np.ndarray:
        """(I, rows) re-based segment sketches of [a, b], empty when a > b."""
        if a > b:
            return np.zeros((prefix.shape[0], self.phases.shape[1]), dtype=np.complex128)
        rot = np.exp(-1j * self.phases * (a - 1))
        return rot * (prefix[:, b, :] - prefix[:, a - 1, :])


@dataclass
class PatternIndex:
    params: StreamParams
    patterns: np.ndarray  # (I, n) int8
    first_blocks: np.ndarray  # (I, B) int8
    matrices: np.ndarray  # (I, rows, B) int8
    sigma_signs: np.ndarray  # (I, nb - 1) int8
    super_sketches: np.ndarray  # (I, B + 1, rows) int64
    suffix_sketches: np.ndarray  # (I, B, rows) int64
    tables: list[PrefixLengthTable]
    phase_bank: _PhaseBank
    pattern_phases: np.ndarray  # (I, B + 1, rows) complex128
    seg_sketchers: list[SegmentSketcher]

    @property
    def shared_pattern(self) -> bool:
        return bool(np.all(self.patterns == self.patterns[0]))


def preprocess_pattern(
    pattern,
    eps: float,
    seed: Seed,
    instances: int = 1,
    large_skip_threshold: float | None = None,
) -> PatternIndex:
    """Build the immutable pattern-side index for one or more instances.

    `pattern` is a binary vector, or an (instances, n) stack when each
    instance streams its own mapped pattern.
    """
    arr = np.asarray(pattern, dtype=np.int8)
    if arr.ndim == 1:
        arr = np.broadcast_to(arr, (instances, len(arr))).copy()
    if arr.ndim != 2 or arr.shape[0] != instances:
        raise ValueError("pattern stack must be (instances, n)")
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("pattern must be binary")
    inst, n = arr.shape
    params = StreamParams.create(n, eps, inst, large_skip_threshold)
    B, r, nb = params.block_len, params.rows, params.blocks_per_window

    matrices = np.empty((inst, r, B), dtype=np.int8)
    sigma = np.empty((inst, nb - 1), dtype=np.int8)
    phases = np.empty((inst, r), dtype=np.float64)
    seg_sketchers = []
    for i in range(inst):
        matrices[i] = SignSource(seed, f"stream/M/{i}").matrix(r, B)
        sigma[i] = SignSource(seed, f"stream/sigma/{i}").signs(0, 0, nb - 1)
        ph = PhaseSource(seed, f"stream/phase/{i}")
        seg = SegmentSketcher(r, ph)
        seg_sketchers.append(seg)
        phases[i] = seg.phases
    bank = _PhaseBank(phases)

    mf = matrices.astype(np.float64)
    pf = arr.astype(np.float64)

    # block sketches of every pattern block alignment: block t of offset j
    # covers P[j + (t-1)B + 1 .. j + tB]
    starts_all = np.lib.stride_tricks.sliding_window_view(pf, B, axis=1)  # (I, n-B+1, B)
    block_sk = np.einsum("irb,isb->isr", mf, starts_all)  # (I, n-B+1, rows)
    super_sketches = np.zeros((inst, B + 1, r), dtype=np.int64)
    for t in range(1, nb):
        offs = np.arange(B + 1) + (t - 1) * B  # start index (0-based) of block t
        contrib = block_sk[:, offs, :] * sigma[:, t - 1].astype(np.float64)[:, None, None]
        super_sketches += np.rint(contrib).astype(np.int64)

    suffix_windows = np.zeros((inst, B, B), dtype=np.float64)
    for i_suf in range(1, B + 1):
        suffix_windows[:, i_suf - 1, :i_suf] = pf[:, n - i_suf :]
    suffix_sketches = np.rint(
        np.einsum("irb,isb->isr", mf, suffix_windows)
    ).astype(np.int64)

    tables = [PrefixLengthTable.build(arr[i], eps, max_shift=B) for i in range(inst)]
    pattern_phases = bank.prefix_transform(pf[:, :B])

    return PatternIndex(
        params=params,
        patterns=arr,
        first_blocks=arr[:, :B].copy(),
        matrices=matrices,
        sigma_signs=sigma,
        super_sketches=super_sketches,
        suffix_sketches=suffix_sketches,
        tables=tables,
        phase_bank=bank,
        pattern_phases=pattern_phases,
        seg_sketchers=seg_sketchers,
    )


@dataclass
class _Task:
    name: str
    total_steps: int
    per_symbol: int
    deadline: int  # absolute symbol position by which the task must finish
    remaining: int = field(init=False)
    done: bool = field(init=False, default=False)
    finish: object = None  # callable invoked once when the schedule completes

    def __post_init__(self):
        self.remaining = self.total_steps
        if self.total_steps == 0:
            self._complete()

    def _complete(self):
        if not self.done:
            self.done = True
            if self.finish is not None:
                self.finish()

    def spend(self) -> int:
        used = min(self.per_symbol, self.remaining)
        self.remaining -= used
        if self.remaining == 0:
            self._complete()
        return used


class StreamState:
    """Mutable per-stream state; one logical stream, vectorized instances."""

    def __init__(self, index: PatternIndex):
        p = index.params
        inst, r, nb = p.instances, p.rows, p.blocks_per_window
        self.pos = 0
        self.fill = 0
        self.blocks_done = 0
        self.cur_sketch = np.zeros((inst, r), dtype=np.int64)
        self.ring = np.zeros((nb + 1, inst, r), dtype=np.int64)
        self.super_now = np.zeros((inst, r), dtype=np.int64)
        self.super_ready = False
        self.partial = np.zeros((inst, r), dtype=np.int64)
        self.partial_ready = nb == 2  # empty sum is trivially complete
        self.block_buffer = np.zeros((inst, p.block_len), dtype=np.int8)
        self.structs: dict[int, list[PrefixIndex]] = {}
        self.struct_done: dict[int, bool] = {}
        self.tasks: list[_Task] = []
        self.steps_last = 0
        self.steps_max = 0
        self.deadline_misses = 0
        self.last_parts: np.ndarray | None = None  # (I, 3)
        self.last_estimates: np.ndarray | None = None  # (I,)

    def drain(self, budget_tracker: list[int]) -> None:
        spent = 0
        for task in self.tasks:
            if not task.done:
                spent += task.spend()
        for task in self.tasks:
            if not task.done and self.pos >= task.deadline:
                self.deadline_misses += 1
                task.remaining = 0
                task._complete()
        self.tasks = [t for t in self.tasks if not t.done]
        budget_tracker[0] += spent


def _lower_median(values: np.ndarray) -> float:
    s = np.sort(values)
    return float(s[(len(s) - 1) // 2])


def finalize_block(state: StreamState, index: PatternIndex) -> None:
    """Rotate the sketch ring and schedule the next block's deferred work."""
    p = index.params
    B, r, nb, inst = p.block_len, p.rows, p.blocks_per_window, p.instances
    if state.fill != B:
        raise ValueError(f"block not full: {state.fill} of {B} symbols")
    cur = state.blocks_done + 1  # 1-based index of the block just completed
    cap = nb + 1
    state.ring[cur % cap] = state.cur_sketch

    # rolling super-sketch for the next block's outputs: the scheduled
    # partial (blocks cur-nb+1 .. cur-1 minus the head) plus the newest term
    if cur >= nb - 1:
        if not state.partial_ready:
            state.deadline_misses += 1
        sigma_last = index.sigma_signs[:, nb - 2].astype(np.int64)
        state.super_now = state.partial + sigma_last[:, None] * state.ring[cur % cap]
        state.super_ready = True

    # schedule the partial for the window used two blocks from now:
    # sum of sigma_t * sketch(block cur-nb+2+t) for t = 1 .. nb-2
    if cur >= nb - 2:
        state.partial = np.zeros((inst, r), dtype=np.int64)
        state.partial_ready = False
        first_block = cur - nb + 3

        def finish_partial(first=first_block, st=state):
            acc = np.zeros((inst, r), dtype=np.int64)
            for t in range(1, nb - 1):
                blk = first + t - 1
                acc += index.sigma_signs[:, t - 1].astype(np.int64)[:, None] * st.ring[blk % cap]
            st.partial = acc
            st.partial_ready = True

        total = (nb - 2) * r
        state.tasks.append(
            _Task(
                name=f"super-partial@{cur}",
                total_steps=total,
                per_symbol=max(1, math.ceil(total / B)) if total else 0,
                deadline=state.pos + B,
                finish=finish_partial,
            )
        )

    # per-block prefix index against the pattern's first block, consumed
    # nb blocks later; constructed here, charged over the next block
    dists = suffix_vs_prefix_distances_batch(state.block_buffer, index.first_blocks)
    structs = []
    anchor_span = 0
    sketch_count = 0
    for i in range(inst):
        idx = build_block_index(
            state.block_buffer[i],
            index.first_blocks[i],
            p.eps,
            p.k,
            index.seg_sketchers[i],
            distances=dists[i],
        )
        structs.append(idx)
        anchor_span += sum(B - a.position + 1 for a in idx.anchors)
        sketch_count += sum(len(a.borders) for a in idx.anchors)
    state.structs[cur] = structs
    state.struct_done[cur] = False
    # evict the structure that has rotated out of the window
    state.structs.pop(cur - cap, None)
    state.struct_done.pop(cur - cap, None)

    fft_steps = 4 * B * max(1, math.ceil(math.log2(2 * B)))
    total = fft_steps + (anchor_span + 8 * r * sketch_count) // inst

    def finish_struct(c=cur, st=state):
        st.struct_done[c] = True

    state.tasks.append(
        _Task(
            name=f"block-index@{cur}",
            total_steps=total,
            per_symbol=max(1, math.ceil(total / B)),
            deadline=state.pos + B,
            finish=finish_struct,
        )
    )

    state.blocks_done = cur
    state.fill = 0
    state.cur_sketch = np.zeros((inst, r), dtype=np.int64)
    state.block_buffer[:] = 0


def push_symbol(state: StreamState, index: PatternIndex, bit) -> float | None:
    """Feed one symbol (scalar, or per-instance vector); returns the
    amplified estimate once the first full window has arrived."""
    p = index.params
    B, r, nb, inst = p.block_len, p.rows, p.blocks_per_window, p.instances
    bits = np.asarray(bit, dtype=np.int64)
    if bits.ndim == 0:
        bits = np.full(inst, int(bits), dtype=np.int64)
    if bits.shape != (inst,):
        raise ValueError(f"bit must be scalar or shape ({inst},)")
    if bits.min() < 0 or bits.max() > 1:
        raise ValueError("symbols must be 0 or 1")

    steps = [0]
    state.pos += 1
    j = state.fill  # 0-based column of the arriving symbol
    state.fill += 1
    state.block_buffer[:, j] = bits
    state.cur_sketch += index.matrices[:, :, j].astype(np.int64) * bits[:, None]
    steps[0] += r

    state.drain(steps)

    result = None
    if state.pos >= p.n:
        i = state.fill
        cur = state.blocks_done + 1
        h_m = _estimate_middle(state, index, i, steps)
        skip = h_m > p.large_skip_threshold
        h_s = _estimate_suffix(state, index, i, steps, skip)
        h_p = _estimate_prefix(state, index, i, cur, steps, skip)
        parts = np.stack([h_p, h_m, h_s], axis=1)
        state.last_parts = parts
        state.last_estimates = parts.sum(axis=1)
        result = (
            _lower_median(parts[:, 0]) + _lower_median(parts[:, 1]) + _lower_median(parts[:, 2])
        )

    if state.fill == B:
        finalize_block(state, index)

    state.steps_last = steps[0]
    state.steps_max = max(state.steps_max, steps[0])
    return result


def _estimate_middle(state, index, i, steps) -> np.ndarray:
    p = index.params
    assert state.super_ready, "rolling super-sketch consumed before completion"
    offset = p.block_len - i  # middle part starts at pattern position offset + 1
    diff = (state.super_now - index.super_sketches[:, offset, :]).astype(np.float64)
    steps[0] += 2 * p.rows + 2
    n_sq = np.einsum("ij,ij->i", diff, diff)
    return n_sq / p.rows / (1.0 - p.eps / 3.0)


def _estimate_suffix(state, index, i, steps, skip) -> np.ndarray:
    p = index.params
    out = np.zeros(p.instances)
    live = ~skip
    if live.any():
        diff = (state.cur_sketch - index.suffix_sketches[:, i - 1, :]).astype(np.float64)
        n_sq = np.einsum("ij,ij->i", diff, diff)
        out[live] = (n_sq / p.rows / (1.0 - p.eps / 3.0))[live]
        steps[0] += 2 * p.rows + 2
    return out


def _estimate_prefix(state, index, i, cur, steps, skip) -> np.ndarray:
    p = index.params
    out = np.zeros(p.instances)
    left_len = p.block_len - i
    if left_len == 0:
        return out
    live = np.flatnonzero(~skip)
    if len(live) == 0:
        return out
    window_start_block = cur - p.blocks_per_window
    assert window_start_block >= 1, "prefix query before the window is full"
    assert state.struct_done.get(window_start_block, False), (
        "block index consumed before its construction completed"
    )
    structs = state.structs[window_start_block]
    a = i + 1  # alignment within the window-start block
    for inst in live:
        est = query_prefix_distance(
            structs[inst],
            a,
            prefix_len_table=index.tables[inst],
            pattern_phases=index.pattern_phases[inst],
        )
        out[inst] = est.value
    steps[0] += 12 * p.rows + 8
    return out


def space_report(state: StreamState, index: PatternIndex) -> dict:
    """Resident summary bits for one instance, by component.

    Sketch entries are bounded by the block length and charged at their
    integer width; phase values at two 64-bit reals; the sign matrices and
    phases themselves are derivable from the seed and charged to it.
    """
    p = index.params
    B, r, nb, n = p.block_len, p.rows, p.blocks_per_window, p.n
    entry_bits = max(1, math.ceil(math.log2(2 * B + 1)))
    super_bits = max(1, math.ceil(math.log2(2 * n + 1)))
    table = index.tables[0]
    pattern_bits = {
        "first_block": B,
        "super_sketches": (B + 1) * r * super_bits,
        "suffix_sketches": B * r * entry_bits,
        "prefix_length_table": table.bit_size(),
        "pattern_phase_prefix": (B + 1) * r * 128,
        "seed": 256,
    }
    struct_bits = sum(
        structs[0].bit_size() for structs in state.structs.values()
    )
    state_bits = {
        "current_sketch": r * entry_bits,
        "sketch_ring": (nb + 1) * r * entry_bits,
        "rolling_supers": 2 * r * super_bits,
        "block_buffer": B,
        "block_indexes": struct_bits,
        "counters": 6 * 64,
    }
    total = sum(pattern_bits.values()) + sum(state_bits.values())
    return {
        "pattern_bits": pattern_bits,
        "state_bits": state_bits,
        "total_bits_per_instance": total,
        "instances": p.instances,
        "steps_last_symbol": state.steps_last,
        "steps_max_symbol": state.steps_max,
        "deadline_misses": state.deadline_misses,
    }


def space_formula(n: int, eps: float) -> int:
    """Analytic per-instance resident-bit count at parameters (n, eps).

    Mirrors space_report with content-dependent parts at their caps (full
    border budget per anchor level), so it can be evaluated at sizes far
    beyond what can be streamed; cross-checked against measurements in
    tests.
    """
    k = max(2, math.ceil(1.0 / eps))
    root = math.isqrt(n)
    ceil_root = root if root * root == n else root + 1
    B = k * ceil_root
    r = 9 * k * k
    nb = max(2, n // B if n % B == 0 else n // B + 1)
    entry = max(1, math.ceil(math.log2(2 * B + 1)))
    sup = max(1, math.ceil(math.log2(2 * n + 1)))
    table_rows = int(math.floor(math.log(n) / math.log1p(eps))) + 3
    pos_bits = max(1, math.ceil(math.log2(n + 2)))
    q = max(1, math.ceil(math.log(B) / math.log(k)))
    pattern = B + (B + 1) * r * sup + B * r * entry + B * table_rows * pos_bits
    pattern += (B + 1) * r * 128 + 256
    struct_each = 4 * 32 + q * (pos_bits + (k * k) * (pos_bits + 128 * r))
    struct_each += (k * k) * (pos_bits + 8)
    state = r * entry + (nb + 1) * r * entry + 2 * r * sup + B
    state += (nb + 1) * struct_each + 6 * 64
    return pattern + state


class HammingStream:
    """Convenience wrapper: feed symbols, collect per-alignment estimates."""

    def __init__(
        self,
        pattern,
        eps: float,
        seed: Seed,
        instances: int = 1,
        large_skip_threshold: float | None = None,
    ):
        self.index = preprocess_pattern(pattern, eps, seed, instances, large_skip_threshold)
        self.state = StreamState(self.index)

    def push(self, bit) -> float | None:
        return push_symbol(self.state, self.index, bit)

    def run(self, text) -> np.ndarray:
        out = []
        for sym in np.asarray(text):
            est = self.push(int(sym))
            if est is not None:
                out.append(est)
        return np.asarray(out)

    def report(self) -> dict:
        return space_report(self.state, self.index)

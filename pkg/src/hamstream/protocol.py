"""One-way protocol simulations with exact bit accounting.

Problem 1 (two parties, pattern shared): Alice holds the first half of the
text, builds an anchored prefix index over it, and ships it; Bob adds his
exact second-half distances to the queried prefix estimates.

Problem 2 (three parties, pattern known only to Alice): Alice ships stable
sketches of pattern suffixes and block-aligned prefixes plus an
interleaved RLE of the longest small-period prefix; Bob forwards those,
adds text-suffix sketches, screens blocks left of the periodic zone for
small-distance alignments, locates the first truly close alignment by
exact search over the decoded prefix, and ships its mismatch fix-up list
plus his last block verbatim; Charlie reconstructs the text tail exactly
and answers every alignment.

All payload fields crossing a party boundary are charged to the
transcript: positions at ceil(log2) widths, reals at 64 bits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .prefix_index import build_prefix_index, query_all_protocol
from .pstable import PStableSketcher
from .rng import Seed, SignSource
from .seqstructs import RleEncoding, rle_decode, rle_encode
from .sketch import Sketcher

__all__ = [
    "Transcript",
    "Problem2Params",
    "run_problem1",
    "p2_alice_message",
    "p2_bob_message",
    "p2_charlie_eval",
    "run_problem2",
]

_PARTY_RANK = {"alice": 0, "bob": 1, "charlie": 2}


@dataclass
class Transcript:
    messages: list[tuple[str, str, str, int]] = field(default_factory=list)

    def add(self, sender: str, receiver: str, payload_id: str, bit_size: int) -> None:
        if _PARTY_RANK[sender] >= _PARTY_RANK[receiver]:
            raise ValueError(f"one-way order violated: {sender} -> {receiver}")
        if bit_size < 0:
            raise ValueError("negative bit size")
        self.messages.append((sender, receiver, payload_id, int(bit_size)))

    @property
    def total_bits(self) -> int:
        return sum(m[3] for m in self.messages)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"sender": s, "receiver": r, "payload": pid, "bits": bits},
                sort_keys=True,
            )
            for s, r, pid, bits in self.messages
        ]
        return "\n".join(lines) + "\n"


def _bits_for(value: int) -> int:
    return max(1, math.ceil(math.log2(value + 1)))


# ---------------------------------------------------------------------------
# Problem 1: both parties know the pattern


def run_problem1(
    pattern,
    text,
    eps: float,
    seed: Seed,
    k: int | None = None,
    sketch_eps: float | None = None,
) -> tuple[np.ndarray, Transcript]:
    """Estimates for all n + 1 alignments, plus the transcript.

    The index is sketched at eps / 3 unless overridden; Bob's second-half
    distances are exact, so only the first-half part carries error.
    """
    p = np.asarray(pattern, dtype=np.int8)
    t = np.asarray(text, dtype=np.int8)
    n = len(p)
    if len(t) != 2 * n:
        raise ValueError(f"text must have length 2n = {2 * n}, got {len(t)}")
    t1, t2 = t[:n], t[n:]
    sketcher = Sketcher(
        (eps / 3.0) if sketch_eps is None else sketch_eps,
        n,
        SignSource(seed, "p1/sketch"),
    )
    idx = build_prefix_index(t1, p, eps, sketcher, k=k)
    transcript = Transcript()
    transcript.add("alice", "bob", "prefix-index", idx.bit_size())

    first = query_all_protocol(idx, p)
    estimates = np.empty(n + 1)
    for i in range(1, n + 2):
        # exact distance of P[n-i+2 .. n] against Bob's half
        overlap = i - 1
        exact2 = int(np.count_nonzero(p[n - overlap :] != t2[:overlap])) if overlap else 0
        estimates[i - 1] = (first[i - 1] if i <= n else 0.0) + exact2
    return estimates, transcript


# ---------------------------------------------------------------------------
# Problem 2: only Alice knows the pattern


@dataclass
class Problem2Params:
    n: int
    B: int
    tau: float
    eps: float
    sigma: int = 2

    @classmethod
    def for_length(cls, n: int, eps: float, sigma: int = 2) -> "Problem2Params":
        B = math.isqrt(n)
        if B * B != n:
            raise ValueError(f"pattern length must be a perfect square, got {n}")
        tau = 2.0 * math.sqrt(n) / eps
        params = cls(n=n, B=B, tau=tau, eps=eps, sigma=sigma)
        assert params.B <= (eps / 2.0) * params.tau + 1e-9
        return params


def _small_period_below(prefix: np.ndarray, x: float, bound: int) -> int | None:
    """Smallest shift ell in [2, bound) whose self-overlap has <= x mismatches."""
    n = len(prefix)
    if n < 2:
        return 2 if bound > 2 else None
    if n <= x + 2 and bound > 2:
        return 2
    limit = min(bound, n + 1)
    for ell in range(2, limit):
        if np.count_nonzero(prefix[: n - ell] != prefix[ell:]) <= x:
            return ell
    return None


@dataclass
class AlicePayload:
    params: Problem2Params
    suffix_sketches: np.ndarray  # (B, m): row i-1 sketches P[i, n]
    prefix_sketches: np.ndarray  # (n/B, m): row j-1 sketches P[1, n - j*B]
    j_star: int
    ell_star: int | None
    rle: RleEncoding | None
    m: int
    p_stable: float
    scale: float

    def bit_size(self) -> int:
        n = self.params.n
        sk_bits = 64 * (3 + self.m)
        total = 4 * 64  # params header
        total += (len(self.suffix_sketches) + len(self.prefix_sketches)) * sk_bits
        total += _bits_for(len(self.prefix_sketches))  # j_star
        if self.rle is not None:
            total += _bits_for(self.params.B)  # ell_star
            total += self.rle.bit_size(n_hint=n, sigma_hint=self.params.sigma)
        return total


def p2_alice_message(pattern, eps: float, seed: Seed, sigma: int = 2) -> AlicePayload:
    p = np.asarray(pattern, dtype=np.int64)
    n = len(p)
    params = Problem2Params.for_length(n, eps, sigma)
    B = params.B
    nb = n // B
    sketcher = PStableSketcher(eps / 2.0, sigma, seed, stream_id="p2/stable")

    suffix_windows = np.zeros((B, n), dtype=np.float64)
    for i in range(1, B + 1):
        suffix_windows[i - 1, : n - i + 1] = p[i - 1 :]
    suffix_sketches = suffix_windows @ sketcher.samples(n).T

    prefix_windows = np.zeros((nb, n), dtype=np.float64)
    for j in range(1, nb + 1):
        prefix_windows[j - 1, : n - j * B] = p[: n - j * B]
    prefix_sketches = prefix_windows @ sketcher.samples(n).T

    x = (2.0 + eps) * params.tau
    j_star, ell_star = nb, None
    for j in range(1, nb + 1):
        ell = _small_period_below(p[: n - j * B], x, B)
        if ell is not None:
            j_star, ell_star = j, ell
            break
    rle = None
    if ell_star is not None and n - j_star * B > 0:
        rle = rle_encode(p[: n - j_star * B], ell_star)
    return AlicePayload(
        params=params,
        suffix_sketches=suffix_sketches,
        prefix_sketches=prefix_sketches,
        j_star=j_star,
        ell_star=ell_star,
        rle=rle,
        m=sketcher.m,
        p_stable=sketcher.p,
        scale=sketcher.scale,
    )


@dataclass
class BobPayload:
    alice: AlicePayload
    text_suffix_sketches: np.ndarray  # (n/B, m): row j-1 sketches T[j*B, n]
    small_alignments: list[tuple[int, float]]
    j_star_star: int | None
    p_pos: int | None
    mismatches: list[tuple[int, int]]  # (offset in prefix, text symbol)
    last_block: np.ndarray

    def bit_size(self) -> int:
        params = self.alice.params
        n, B = params.n, params.B
        pos_bits = _bits_for(2 * n)
        sym_bits = _bits_for(params.sigma - 1)
        sk_bits = 64 * (3 + self.alice.m)
        total = self.alice.bit_size()  # forwarded verbatim
        total += len(self.text_suffix_sketches) * sk_bits
        total += _bits_for(len(self.small_alignments)) + len(self.small_alignments) * (
            pos_bits + 64
        )
        total += 1 + (_bits_for(n // B) if self.j_star_star is not None else 0)
        total += pos_bits if self.p_pos is not None else 0
        total += _bits_for(len(self.mismatches) + 1) + len(self.mismatches) * (
            pos_bits + sym_bits
        )
        total += B * sym_bits
        return total


def p2_bob_message(alice_payload: AlicePayload, t1, eps: float, seed: Seed) -> BobPayload:
    params = alice_payload.params
    n, B, tau, sigma = params.n, params.B, params.tau, params.sigma
    nb = n // B
    t1 = np.asarray(t1, dtype=np.int64)
    if len(t1) != n:
        raise ValueError("Bob's half must have length n")
    sketcher = PStableSketcher(
        eps / 2.0, sigma, seed, stream_id="p2/stable", scale=alice_payload.scale
    )
    if sketcher.m != alice_payload.m or sketcher.p != alice_payload.p_stable:
        raise ValueError("malformed payload: sketch geometry mismatch")

    suffix_windows = np.zeros((nb, n), dtype=np.float64)
    for j in range(1, nb + 1):
        suffix_windows[j - 1, : n - j * B + 1] = t1[j * B - 1 :]
    text_suffix_sketches = suffix_windows @ sketcher.samples(n).T

    # screening: blocks left of the small-period zone hold at most one close
    # alignment each; report estimates under (1 + eps/2) * tau
    small: list[tuple[int, float]] = []
    for j in range(1, alice_payload.j_star):
        L = n - j * B
        if L <= 0:
            continue
        starts = np.arange((j - 1) * B, j * B)  # 0-based alignment starts
        win_sk = sketcher.sketch_windows(t1, starts, L)
        diffs = np.abs(win_sk - alice_payload.prefix_sketches[j - 1][:, None])
        meds = np.median(diffs, axis=0)
        ests = np.where(meds > 0, (meds / sketcher.scale) ** sketcher.p, 0.0)
        for offset in np.flatnonzero(ests < (1 + eps / 2.0) * tau):
            small.append((int(starts[offset]) + 1, float(ests[offset])))

    # exact search right of the zone using the decoded prefix
    decoded = (
        rle_decode(alice_payload.rle)
        if alice_payload.rle is not None
        else np.zeros(0, dtype=np.int64)
    )
    j_star_star = p_pos = None
    mismatches: list[tuple[int, int]] = []
    for j in range(alice_payload.j_star, nb + 1):
        L = n - j * B
        prefix = decoded[:L]
        starts = np.arange((j - 1) * B, j * B)
        if L > 0:
            windows = np.lib.stride_tricks.sliding_window_view(t1, L)[starts]
            dists = np.count_nonzero(windows != prefix[None, :], axis=1)
        else:
            dists = np.zeros(len(starts), dtype=np.int64)
        close = np.flatnonzero(dists <= tau)
        if len(close):
            j_star_star = j
            p_pos = int(starts[close[0]]) + 1
            window = t1[p_pos - 1 : p_pos - 1 + L]
            for y in np.flatnonzero(window != prefix):
                mismatches.append((int(y) + 1, int(window[y])))
            break
    return BobPayload(
        alice=alice_payload,
        text_suffix_sketches=text_suffix_sketches,
        small_alignments=small,
        j_star_star=j_star_star,
        p_pos=p_pos,
        mismatches=mismatches,
        last_block=t1[n - B :].copy(),
    )


def p2_charlie_eval(bob_payload: BobPayload, t2, seed: Seed) -> tuple[np.ndarray, np.ndarray | None]:
    """Estimates for all n + 1 alignments and the reconstructed text tail.

    A pure function of the forwarded payload and Charlie's half; the
    reconstruction (text from the close alignment onward) is returned for
    verification.
    """
    alice = bob_payload.alice
    params = alice.params
    n, B, tau, sigma, eps = params.n, params.B, params.tau, params.sigma, params.eps
    nb = n // B
    t2 = np.asarray(t2, dtype=np.int64)
    if len(t2) != n:
        raise ValueError("Charlie's half must have length n")
    sketcher = PStableSketcher(
        eps / 2.0, sigma, seed, stream_id="p2/stable", scale=alice.scale
    )

    estimates = np.full(n + 1, np.nan)
    small_map = {pos: est for pos, est in bob_payload.small_alignments}

    # reconstruction of T[p, n] from the decoded prefix, fixes, last block
    recon = None
    p_pos = bob_payload.p_pos
    if p_pos is not None:
        j2 = bob_payload.j_star_star
        L = n - j2 * B
        prefix = (
            rle_decode(alice.rle)[:L] if alice.rle is not None else np.zeros(0, dtype=np.int64)
        ).copy()
        for offset, symbol in bob_payload.mismatches:
            if not 1 <= offset <= L:
                raise ValueError("reconstruction inconsistency: mismatch offset out of bounds")
            prefix[offset - 1] = symbol
        tail_start = p_pos + L  # 1-based position right after the fixed prefix
        last_block_start = n - B + 1
        if tail_start < last_block_start:
            raise ValueError("reconstruction inconsistency: gap before the last block")
        tail = bob_payload.last_block[tail_start - last_block_start :]
        recon = np.concatenate([prefix, tail])

        known = np.concatenate([recon, t2])  # text from position p_pos on
        starts = np.arange(0, n + 1 - (p_pos - 1))
        win_sk = sketcher.sketch_windows(known, starts, n)
        diffs = np.abs(win_sk - alice.suffix_sketches[0][:, None])
        meds = np.median(diffs, axis=0)
        vals = np.where(meds > 0, (meds / sketcher.scale) ** sketcher.p, 0.0)
        estimates[p_pos - 1 : n + 1] = vals

    # remaining alignments: echo screened values when truly small, else the
    # large-distance path through a block border
    y = sketcher.samples(2 * n)
    for j in range(1, nb + 1):
        lo, hi = (j - 1) * B + 1, j * B
        todo = [
            i
            for i in range(lo, min(hi, n + 1) + 1)
            if np.isnan(estimates[i - 1])
        ]
        if not todo:
            continue
        base = bob_payload.text_suffix_sketches[j - 1]
        ext = np.zeros(sketcher.m)
        ext_upto = 0
        for i in todo:
            echoed = small_map.get(i)
            if echoed is not None and echoed < tau:
                estimates[i - 1] = echoed
                continue
            # extend the text suffix sketch with t2 symbols through i+n-1
            need = i - 1
            if need > ext_upto:
                cols = np.arange(ext_upto, need) + (n - j * B + 1)
                ext = ext + y[:, cols] @ t2[ext_upto:need].astype(np.float64)
                ext_upto = need
            suffix_row = j * B - i + 1
            med = float(np.median(np.abs(base + ext - alice.suffix_sketches[suffix_row - 1])))
            est = (med / sketcher.scale) ** sketcher.p if med > 0 else 0.0
            estimates[i - 1] = est + B
    if np.isnan(estimates[n]):
        # alignment n+1: the window is exactly Charlie's half
        sk_t2 = sketcher.sketch(t2)
        med = float(np.median(np.abs(sk_t2.values - alice.suffix_sketches[0])))
        estimates[n] = (med / sketcher.scale) ** sketcher.p if med > 0 else 0.0
    assert not np.isnan(estimates).any()
    return estimates, recon


def run_problem2(
    pattern, text, eps: float, seed: Seed, sigma: int = 2
) -> tuple[np.ndarray, Transcript, dict]:
    """Full three-party run; returns estimates, transcript, and debug info."""
    p = np.asarray(pattern, dtype=np.int64)
    t = np.asarray(text, dtype=np.int64)
    n = len(p)
    if len(t) != 2 * n:
        raise ValueError(f"text must have length 2n = {2 * n}")
    alice = p2_alice_message(p, eps, seed, sigma)
    bob = p2_bob_message(alice, t[:n], eps, seed)
    estimates, recon = p2_charlie_eval(bob, t[n:], seed)
    transcript = Transcript()
    transcript.add("alice", "bob", "stable-sketches+rle", alice.bit_size())
    transcript.add("bob", "charlie", "forward+suffixes+fixups", bob.bit_size())
    debug = {
        "j_star": alice.j_star,
        "j_star_star": bob.j_star_star,
        "p_pos": bob.p_pos,
        "small_alignments": bob.small_alignments,
        "reconstruction": recon,
    }
    return estimates, transcript, debug

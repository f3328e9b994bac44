"""Command-line surface: streaming runs, protocol simulations, calibration,
synthetic corpora, and benchmark sweeps.

Every subcommand is reproducible from its flags plus the seed; output files
carry a versioned schema comment and contain nothing nondeterministic.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .alphabet import stream_general
from .config import load_thresholds
from .oracle import sliding_hamming
from .protocol import run_problem1, run_problem2
from .pstable import CalibrationTable, calibrate_scale
from .rng import Seed
from .seqstructs import x_period
from .streaming import HammingStream, space_report
from .util import rel_error, within_fraction

CSV_VERSION = "hamstream-csv v1"


def _fail(message: str) -> "NoReturn":  # noqa: F821
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(1)


def parse_seed(text: str | None) -> Seed:
    if text is None:
        text = os.environ.get("HAMSTREAM_SEED")
    if text is None:
        _fail("no seed: pass --seed or set HAMSTREAM_SEED")
    text = text.strip()
    if len(text) == 64 and all(c in "0123456789abcdefABCDEF" for c in text):
        return Seed.from_hex(text)
    if text.isdigit():
        return Seed.from_int(int(text))
    _fail("seed must be a 64-character hex string or a decimal integer")


def _check_eps(eps: float, allow_large: bool) -> float:
    limit = load_thresholds()["eps_limit_without_flag"]
    if eps <= 0:
        _fail("eps must be positive")
    if eps > limit and not allow_large:
        _fail(f"eps {eps} exceeds {limit}; pass --allow-large-eps to override")
    return eps


def read_binary(path: str, packed: bool = False, length: int | None = None) -> np.ndarray:
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    if packed:
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
        return bits[:length].astype(np.int8) if length else bits.astype(np.int8)
    raw = np.frombuffer(data, dtype=np.uint8)
    raw = raw[~np.isin(raw, (9, 10, 13, 32))]  # tolerate whitespace
    if raw.size and not np.isin(raw, (0x30, 0x31)).all():
        _fail(f"{path}: binary input must contain only '0'/'1' bytes")
    return (raw - 0x30).astype(np.int8)


def read_symbols(path: str, sigma: int) -> np.ndarray:
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    if sigma <= 256:
        arr = np.frombuffer(data, dtype=np.uint8).astype(np.int64)
    else:
        arr = np.array([int(tok) for tok in data.split()], dtype=np.int64)
    if arr.size and arr.max() >= sigma:
        _fail(f"{path}: symbol {int(arr.max())} out of alphabet range {sigma}")
    return arr


def _write_csv(path: str, schema: str, header: list[str], rows) -> None:
    lines = [f"# {CSV_VERSION} {schema}", ",".join(header)]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_stream(args) -> int:
    eps = _check_eps(args.eps, args.allow_large_eps)
    seed = parse_seed(args.seed)
    pattern = read_binary(args.pattern, args.bits)
    text = read_binary(args.text, args.bits)
    stream = HammingStream(pattern, eps, seed, instances=args.instances)
    estimates = stream.run(text)
    if args.oracle:
        truths = sliding_hamming(pattern, text)
        header = ["position", "estimate", "oracle", "rel_error"]
        rows = [
            [i + 1, repr(float(v)), int(t), repr(rel_error(float(v), float(t)))]
            for i, (v, t) in enumerate(zip(estimates, truths))
        ]
    else:
        header = ["position", "estimate"]
        rows = [[i + 1, repr(float(v))] for i, v in enumerate(estimates)]
    _write_csv(args.out, "stream", header, rows)
    if args.report:
        Path(args.report).write_text(
            json.dumps(space_report(stream.state, stream.index), indent=2, sort_keys=True) + "\n"
        )
    return 0


def cmd_stream_general(args) -> int:
    eps = _check_eps(args.eps, args.allow_large_eps)
    seed = parse_seed(args.seed)
    pattern = read_symbols(args.pattern, args.sigma)
    text = read_symbols(args.text, args.sigma)
    estimates, family = stream_general(
        pattern, text, eps, seed, args.sigma, maps=args.maps
    )
    header = ["position", "estimate"]
    if args.oracle:
        truths = sliding_hamming(pattern, text)
        rows = [
            [i + 1, repr(float(v)), int(t), repr(rel_error(float(v), float(t)))]
            for i, (v, t) in enumerate(zip(estimates, truths))
        ]
        header += ["oracle", "rel_error"]
    else:
        rows = [[i + 1, repr(float(v))] for i, v in enumerate(estimates)]
    _write_csv(args.out, "stream-general", header, rows)
    return 0


def cmd_protocol(args) -> int:
    eps = _check_eps(args.eps, args.allow_large_eps)
    seed = parse_seed(args.seed)
    if args.pattern and args.text:
        pattern = read_binary(args.pattern)
        text = read_binary(args.text)
    elif args.n:
        rng = np.random.default_rng(
            np.frombuffer(seed.derive("protocol-corpus").value, dtype=np.uint64)
        )
        pattern = rng.integers(0, 2, args.n).astype(np.int8)
        text = rng.integers(0, 2, 2 * args.n).astype(np.int8)
    else:
        _fail("pass --pattern/--text or --n for a synthetic corpus")
    if args.problem == 1:
        estimates, transcript = run_problem1(pattern, text, eps, seed)
    else:
        estimates, transcript, _ = run_problem2(pattern, text, eps, seed)
    truths = sliding_hamming(pattern, text)
    frac = within_fraction(estimates, truths, 1 + eps)
    max_rel = max(abs(rel_error(float(e), float(t))) for e, t in zip(estimates, truths))
    if args.out_transcript:
        Path(args.out_transcript).write_text(transcript.to_jsonl())
    _write_csv(
        args.out_summary,
        "protocol-summary",
        ["problem", "n", "eps", "seed", "total_bits", "max_rel_error", "frac_within_eps"],
        [
            [
                args.problem,
                len(pattern),
                args.eps,
                parse_seed(args.seed).to_hex()[:16],
                transcript.total_bits,
                repr(float(max_rel)),
                repr(float(frac)),
            ]
        ],
    )
    return 0


def cmd_calibrate(args) -> int:
    seed = parse_seed(args.seed)
    table = CalibrationTable()
    scale = calibrate_scale(args.p, args.m, args.trials, seed, sigma=args.sigma)
    table.put(args.p, args.m, scale, sigma=args.sigma)
    table.save(args.out)
    return 0


def _gen_corpus(args, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n, tlen = args.n, args.text_len or 4 * args.n
    sigma = args.sigma
    pattern = rng.integers(0, sigma, n)
    text = rng.integers(0, sigma, tlen)
    if args.kind == "planted":
        pos = args.plant_pos or (tlen - n) // 2 + 1
        if not 1 <= pos <= tlen - n + 1:
            _fail("plant position out of range")
        window = pattern.copy()
        flips = rng.choice(n, size=args.plant_dist, replace=False)
        shift = rng.integers(1, sigma, size=args.plant_dist)
        window[flips] = (window[flips] + shift) % sigma
        text[pos - 1 : pos - 1 + n] = window
    elif args.kind == "periodic":
        base = rng.integers(0, sigma, args.period)
        reps = math.ceil(n / args.period)
        pattern = np.tile(base, reps)[:n]
        # corrupt only the final period block: each corruption then costs a
        # single mismatch at the period shift, keeping the x-period bounded
        count = min(args.noise, args.period, n)
        noise = n - args.period + rng.choice(args.period, size=count, replace=False)
        pattern[noise] = (pattern[noise] + rng.integers(1, sigma, size=count)) % sigma
        text = np.tile(base, math.ceil(tlen / args.period))[:tlen]
    elif args.kind == "adversarial-rle":
        # short-period pattern with isolated corruptions: stresses the
        # run-count bound of the interleaved encoding
        base = rng.integers(0, sigma, max(2, args.period))
        pattern = np.tile(base, math.ceil(n / len(base)))[:n]
        step = max(1, n // max(1, args.noise))
        pattern[::step] = (pattern[::step] + 1) % sigma
    return pattern, text


def cmd_gen(args) -> int:
    seed = parse_seed(args.seed)
    rng = np.random.default_rng(np.frombuffer(seed.derive(f"gen/{args.kind}").value, dtype=np.uint64))
    pattern, text = _gen_corpus(args, rng)
    prefix = Path(args.out_prefix)
    if args.sigma == 2:
        prefix.with_suffix(".pattern").write_bytes((pattern + 0x30).astype(np.uint8).tobytes())
        prefix.with_suffix(".text").write_bytes((text + 0x30).astype(np.uint8).tobytes())
    else:
        prefix.with_suffix(".pattern").write_bytes(pattern.astype(np.uint8).tobytes())
        prefix.with_suffix(".text").write_bytes(text.astype(np.uint8).tobytes())
    if args.kind == "periodic":
        assert x_period(pattern, args.noise) <= args.period
    return 0


def cmd_bench(args) -> int:
    eps_grid = [float(x) for x in args.eps_grid.split(",")]
    n_grid = [int(x) for x in args.n_grid.split(",")]
    seed = parse_seed(args.seed)
    rows = []
    for n in n_grid:
        for eps in eps_grid:
            for trial in range(args.seeds):
                cell_seed = seed.derive(f"bench/{args.suite}/{n}/{eps}/{trial}")
                rng = np.random.default_rng(np.frombuffer(cell_seed.value, dtype=np.uint64))
                pattern = rng.integers(0, 2, n).astype(np.int8)
                if args.suite in ("problem1", "problem2"):
                    text = rng.integers(0, 2, 2 * n).astype(np.int8)
                    if args.suite == "problem1":
                        est, tr = run_problem1(pattern, text, eps, cell_seed)
                    else:
                        est, tr, _ = run_problem2(pattern, text, eps, cell_seed)
                    truths = sliding_hamming(pattern, text)
                    rows.append(
                        [
                            args.suite,
                            n,
                            eps,
                            trial,
                            tr.total_bits,
                            repr(within_fraction(est, truths, 1 + eps)),
                            "",
                            "",
                        ]
                    )
                else:
                    text = rng.integers(0, 2, 4 * n).astype(np.int8)
                    hs = HammingStream(pattern, eps, cell_seed, instances=args.instances)
                    est = hs.run(text)
                    truths = sliding_hamming(pattern, text)
                    rep = hs.report()
                    rows.append(
                        [
                            args.suite,
                            n,
                            eps,
                            trial,
                            "",
                            repr(within_fraction(est, truths, 1 + eps)),
                            rep["steps_max_symbol"],
                            rep["total_bits_per_instance"],
                        ]
                    )
    _write_csv(
        args.out,
        "bench",
        ["suite", "n", "eps", "trial", "total_bits", "frac_within_eps", "steps_max", "space_bits"],
        rows,
    )
    return 0


def cmd_report(args) -> int:
    eps = _check_eps(args.eps, args.allow_large_eps)
    seed = parse_seed(args.seed)
    rng = np.random.default_rng(np.frombuffer(seed.derive("report").value, dtype=np.uint64))
    pattern = rng.integers(0, 2, args.n).astype(np.int8)
    text = rng.integers(0, 2, args.symbols or 2 * args.n).astype(np.int8)
    hs = HammingStream(pattern, eps, seed, instances=args.instances)
    hs.run(text)
    Path(args.out).write_text(
        json.dumps(hs.report(), indent=2, sort_keys=True) + "\n"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamstream",
        description="approximate sliding-window Hamming distance toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps=True):
        p.add_argument("--seed", help="64-hex-char seed (or decimal); HAMSTREAM_SEED fallback")
        if eps:
            p.add_argument("--eps", type=float, required=True)
            p.add_argument("--allow-large-eps", action="store_true")

    p = sub.add_parser("stream", help="binary streaming estimates, one CSV row per alignment")
    common(p)
    p.add_argument("--pattern", required=True)
    p.add_argument("--text", required=True, help="file path or - for stdin")
    p.add_argument("--instances", type=int, default=9)
    p.add_argument("--bits", action="store_true", help="inputs are packed bits")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--report", help="also write instrumentation JSON here")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("stream-general", help="general-alphabet streaming via binary mappings")
    common(p)
    p.add_argument("--pattern", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--sigma", type=int, required=True)
    p.add_argument("--maps", type=int, help="override the mapping count")
    p.add_argument("--out", required=True)
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(func=cmd_stream_general)

    p = sub.add_parser("protocol", help="one-way protocol simulation with bit accounting")
    common(p)
    p.add_argument("--problem", type=int, choices=(1, 2), required=True)
    p.add_argument("--pattern")
    p.add_argument("--text")
    p.add_argument("--n", type=int, help="generate a random corpus of this pattern length")
    p.add_argument("--out-summary", required=True)
    p.add_argument("--out-transcript")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("calibrate", help="persist a stable-sketch calibration entry")
    common(p, eps=False)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--sigma", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("gen", help="synthetic corpora")
    common(p, eps=False)
    p.add_argument("--kind", choices=("random", "planted", "periodic", "adversarial-rle"), default="random")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--text-len", type=int)
    p.add_argument("--sigma", type=int, default=2)
    p.add_argument("--plant-pos", type=int)
    p.add_argument("--plant-dist", type=int, default=0)
    p.add_argument("--period", type=int, default=4)
    p.add_argument("--noise", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="grid sweeps emitting one CSV row per cell")
    common(p, eps=False)
    p.add_argument("--suite", choices=("problem1", "problem2", "stream"), required=True)
    p.add_argument("--n-grid", required=True)
    p.add_argument("--eps-grid", required=True)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--instances", type=int, default=9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="space/step instrumentation JSON for a synthetic run")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--symbols", type=int)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

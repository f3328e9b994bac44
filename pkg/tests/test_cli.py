import json
import subprocess
import sys

import numpy as np
import pytest

from hamstream.cli import main, parse_seed, read_binary
from hamstream.rng import Seed

SEED_HEX = Seed.from_int(1234).to_hex()


def _write_corpus(tmp_path, n=64, text_len=256, seed=0):
    rng = np.random.default_rng(seed)
    p = rng.integers(0, 2, n).astype(np.uint8)
    t = rng.integers(0, 2, text_len).astype(np.uint8)
    pf, tf = tmp_path / "p.txt", tmp_path / "t.txt"
    pf.write_bytes((p + 0x30).tobytes())
    tf.write_bytes((t + 0x30).tobytes())
    return pf, tf


def test_parse_seed_forms(monkeypatch):
    assert parse_seed(SEED_HEX).to_hex() == SEED_HEX
    assert parse_seed("77") == Seed.from_int(77)
    monkeypatch.setenv("HAMSTREAM_SEED", "99")
    assert parse_seed(None) == Seed.from_int(99)
    with pytest.raises(SystemExit):
        parse_seed("zz")


def test_read_binary_validates(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_bytes(b"0102")
    with pytest.raises(SystemExit):
        read_binary(str(f))
    g = tmp_path / "ok.txt"
    g.write_bytes(b"0101\n")
    assert read_binary(str(g)).tolist() == [0, 1, 0, 1]


def test_stream_subcommand_and_determinism(tmp_path):
    pf, tf = _write_corpus(tmp_path)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    rep = tmp_path / "rep.json"
    argv = [
        "stream",
        "--pattern", str(pf), "--text", str(tf),
        "--eps", "0.5", "--seed", SEED_HEX,
        "--instances", "3", "--oracle",
    ]
    assert main(argv + ["--out", str(out1), "--report", str(rep)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().strip().split("\n")
    assert lines[0].startswith("# hamstream-csv v1 stream")
    assert lines[1] == "position,estimate,oracle,rel_error"
    assert len(lines) == 2 + 256 - 64 + 1
    report = json.loads(rep.read_text())
    assert report["deadline_misses"] == 0


def test_stream_first_row_zero_when_pattern_prefixes_text(tmp_path):
    rng = np.random.default_rng(7)
    p = rng.integers(0, 2, 64).astype(np.uint8)
    t = np.concatenate([p, rng.integers(0, 2, 64).astype(np.uint8)])
    pf, tf = tmp_path / "p.txt", tmp_path / "t.txt"
    pf.write_bytes((p + 0x30).tobytes())
    tf.write_bytes((t + 0x30).tobytes())
    out = tmp_path / "o.csv"
    main([
        "stream", "--pattern", str(pf), "--text", str(tf),
        "--eps", "0.5", "--seed", "5", "--out", str(out),
    ])
    first = out.read_text().strip().split("\n")[2]
    assert first.split(",")[1] == "0.0"


def test_eps_guard(tmp_path):
    pf, tf = _write_corpus(tmp_path)
    argv = [
        "stream", "--pattern", str(pf), "--text", str(tf),
        "--eps", "0.7", "--seed", "1", "--out", str(tmp_path / "x.csv"),
    ]
    with pytest.raises(SystemExit):
        main(argv)


def test_protocol_subcommand(tmp_path):
    summary = tmp_path / "s.csv"
    transcript = tmp_path / "t.jsonl"
    assert main([
        "protocol", "--problem", "1", "--n", "64",
        "--eps", "0.5", "--seed", SEED_HEX,
        "--out-summary", str(summary), "--out-transcript", str(transcript),
    ]) == 0
    lines = summary.read_text().strip().split("\n")
    assert lines[0].startswith("# hamstream-csv v1 protocol-summary")
    fields = lines[2].split(",")
    assert fields[0] == "1" and int(fields[4]) > 0
    msg = json.loads(transcript.read_text().strip().split("\n")[0])
    assert msg["sender"] == "alice" and msg["receiver"] == "bob"


def test_protocol_identical_halves_zero_error(tmp_path):
    rng = np.random.default_rng(8)
    p = rng.integers(0, 2, 64).astype(np.uint8)
    pf = tmp_path / "p.txt"
    tf = tmp_path / "t.txt"
    pf.write_bytes((p + 0x30).tobytes())
    tf.write_bytes(((np.concatenate([p, p])) + 0x30).tobytes())
    out = tmp_path / "s.csv"
    main([
        "protocol", "--problem", "1", "--pattern", str(pf), "--text", str(tf),
        "--eps", "0.5", "--seed", "3", "--out-summary", str(out),
    ])
    # exact match at alignment 1 contributes zero error at that row
    assert out.read_text().count("\n") == 3


def test_gen_planted_and_periodic(tmp_path):
    prefix = tmp_path / "corpus"
    assert main([
        "gen", "--kind", "planted", "--n", "32", "--text-len", "128",
        "--plant-pos", "40", "--plant-dist", "3",
        "--seed", "11", "--out-prefix", str(prefix),
    ]) == 0
    from hamstream.oracle import sliding_hamming

    p = np.frombuffer(prefix.with_suffix(".pattern").read_bytes(), dtype=np.uint8) - 0x30
    t = np.frombuffer(prefix.with_suffix(".text").read_bytes(), dtype=np.uint8) - 0x30
    assert sliding_hamming(p, t)[39] == 3
    assert main([
        "gen", "--kind", "periodic", "--n", "32", "--period", "4", "--noise", "2",
        "--seed", "12", "--out-prefix", str(tmp_path / "per"),
    ]) == 0


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for prefix in (a, b):
        main([
            "gen", "--kind", "random", "--n", "64",
            "--seed", "13", "--out-prefix", str(prefix),
        ])
    assert a.with_suffix(".text").read_bytes() == b.with_suffix(".text").read_bytes()


def test_calibrate_subcommand(tmp_path):
    out = tmp_path / "cal.json"
    assert main([
        "calibrate", "--p", "1.0", "--m", "32", "--trials", "1000",
        "--seed", "14", "--out", str(out),
    ]) == 0
    data = json.loads(out.read_text())
    assert data["entries"][0]["m"] == 32


def test_bench_subcommand(tmp_path):
    out = tmp_path / "bench.csv"
    assert main([
        "bench", "--suite", "problem1", "--n-grid", "64", "--eps-grid", "0.5",
        "--seeds", "2", "--seed", "15", "--out", str(out),
    ]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 2 + 2


def test_report_subcommand(tmp_path):
    out = tmp_path / "rep.json"
    assert main([
        "report", "--n", "64", "--eps", "0.5", "--seed", "16", "--out", str(out),
    ]) == 0
    data = json.loads(out.read_text())
    assert data["total_bits_per_instance"] > 0


def test_console_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "hamstream.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "stream" in proc.stdout

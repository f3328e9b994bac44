import numpy as np
import pytest

from hamstream.alphabet import BinaryMapFamily, mapped_estimate, onehot_map, stream_general
from hamstream.oracle import hamming, sliding_hamming
from hamstream.rng import Seed
from hamstream.streaming import HammingStream

from .conftest import plant_flips, rand_symbols, within_factor


def test_onehot_small_example():
    # x = "ab", y = "bb" over two symbols: doubled distance
    x = onehot_map([0, 1], 2)
    y = onehot_map([1, 1], 2)
    assert x.tolist() == [1, 0, 0, 1]
    assert hamming(x, y) == 2


def test_onehot_identity_and_errors():
    s = rand_symbols(np.random.default_rng(0), 30, 8)
    assert hamming(onehot_map(s, 8), onehot_map(s, 8)) == 0
    with pytest.raises(ValueError):
        onehot_map([0, 8], 8)


def test_onehot_doubles_distance_exactly():
    rng = np.random.default_rng(1)
    for _ in range(60):
        sigma = int(rng.integers(2, 9))
        n = int(rng.integers(1, 65))
        x = rand_symbols(rng, n, sigma)
        y = rand_symbols(rng, n, sigma)
        assert hamming(onehot_map(x, sigma), onehot_map(y, sigma)) == 2 * hamming(x, y)


def test_map_family_deterministic_uniform():
    fam = BinaryMapFamily(512, 16, Seed.from_int(5))
    again = BinaryMapFamily(512, 16, Seed.from_int(5))
    assert np.array_equal(fam.table, again.table)
    assert set(np.unique(fam.table)) <= {0, 1}
    assert abs(fam.table.mean() - 0.5) < 0.05


def test_mapped_estimate_basics():
    assert mapped_estimate([0, 0, 0]) == 0.0
    assert mapped_estimate([7.0]) == 14.0
    with pytest.raises(ValueError):
        mapped_estimate([])


def test_per_map_distance_expectation():
    # mean mapped distance approaches half the true distance
    rng = np.random.default_rng(2)
    sigma, n, d = 16, 256, 50
    x = rand_symbols(rng, n, sigma)
    y = plant_flips(rng, x, d, sigma=sigma)
    fam = BinaryMapFamily(1024, sigma, Seed.from_int(6))
    mx, my = fam.map_all(x), fam.map_all(y)
    dists = np.count_nonzero(mx != my, axis=1)
    est = mapped_estimate(dists)
    assert abs(est - d) / d < 0.25 / 3


def test_map_count_formula():
    fam = BinaryMapFamily.for_params(0.25, 256, 16, Seed.from_int(7))
    assert fam.count == 16 * 64


def test_stream_general_exact_occurrence():
    rng = np.random.default_rng(3)
    sigma, n = 8, 64
    p = rand_symbols(rng, n, sigma)
    text = np.concatenate([rand_symbols(rng, n, sigma), p, rand_symbols(rng, n, sigma)])
    est, fam = stream_general(p, text, 0.5, Seed.from_int(8), sigma, maps=64)
    oracle = sliding_hamming(p, text)
    hit = int(np.flatnonzero(oracle == 0)[0])
    assert est[hit] == pytest.approx(0.0, abs=1e-9)


def test_stream_general_binary_agrees_with_direct_engine():
    rng = np.random.default_rng(4)
    n = 64
    p = rand_symbols(rng, n, 2)
    text = rand_symbols(rng, 4 * n, 2)
    est, _ = stream_general(p, text, 0.5, Seed.from_int(9), 2, maps=64)
    direct = HammingStream(p.astype(np.int8), 0.5, Seed.from_int(10), instances=9).run(
        text.astype(np.int8)
    )
    oracle = sliding_hamming(p, text)
    joint = 0
    for a, b, true in zip(est, direct, oracle):
        joint += within_factor(a, float(true), 1.5) and within_factor(b, float(true), 1.5)
    assert joint / len(oracle) >= 0.90


def test_stream_general_accuracy_small_grid():
    rng = np.random.default_rng(5)
    sigma, n, eps = 16, 64, 0.5
    hits = total = 0
    for trial in range(3):
        p = rand_symbols(rng, n, sigma)
        text = rand_symbols(rng, 3 * n, sigma)
        est, _ = stream_general(p, text, eps, Seed.from_int(20 + trial), sigma, maps=128)
        oracle = sliding_hamming(p, text)
        for a, true in zip(est, oracle):
            total += 1
            hits += within_factor(a, float(true), 1 + eps)
    assert hits / total >= 0.90

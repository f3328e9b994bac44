import numpy as np
import pytest

from hamstream.oracle import OracleReport, hamming, sliding_hamming

from .conftest import rand_bits


def test_hamming_basic():
    assert hamming("babaa", "baaaa") == 1
    assert hamming("abc", "abc") == 0
    with pytest.raises(ValueError):
        hamming("ab", "abc")


def test_hamming_cross_check_against_bit_recount():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 200))
        a, b = rand_bits(rng, n), rand_bits(rng, n)
        # independent recount through python ints
        expect = sum(1 for x, y in zip(a.tolist(), b.tolist()) if x != y)
        assert hamming(a, b) == expect


def test_sliding_hamming_small_cases():
    assert sliding_hamming("0", "011").tolist() == [0, 1, 1]
    assert sliding_hamming("ab", "ab").tolist() == [0]
    with pytest.raises(ValueError):
        sliding_hamming("abc", "ab")


def test_sliding_hamming_agrees_with_convolution_count():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, m = int(rng.integers(2, 40)), int(rng.integers(40, 120))
        p, t = rand_bits(rng, n), rand_bits(rng, m)
        # FFT-free independent check: correlate matches via outer comparison
        direct = np.array(
            [int(np.sum(t[i : i + n] != p)) for i in range(m - n + 1)]
        )
        assert np.array_equal(sliding_hamming(p, t), direct)


def test_oracle_report_statistics():
    rep = OracleReport(np.array([5, 2, 9, 2]), threshold=4)
    assert rep.minimum == 2
    assert rep.argmin == 1
    assert rep.count_at_most_threshold == 2
    rep2 = OracleReport.for_pair("01", "0101")
    assert rep2.distances.tolist() == [0, 2, 0]

import math

import numpy as np
import pytest

from hamstream.pstable import (
    CalibrationTable,
    PStableSketcher,
    calibrate_scale,
    pstable_estimate,
    pstable_sketch,
    stability_for,
)
from hamstream.rng import Seed

from .conftest import plant_flips, rand_symbols, within_factor


def test_stability_parameter_rule():
    assert stability_for(0.25, 2) == 0.25
    assert math.isclose(stability_for(0.8, 16), 0.2)
    # floored for large alphabets
    assert stability_for(0.25, 256) == 0.125
    with pytest.raises(ValueError):
        stability_for(0.25, 1)


def test_calibration_determinism_and_trials_guard():
    seed = Seed.from_int(21)
    s1 = calibrate_scale(1.0, 32, 1000, seed)
    s2 = calibrate_scale(1.0, 32, 1000, seed)
    assert s1 == s2
    with pytest.raises(ValueError):
        calibrate_scale(1.0, 32, 999, seed)


def test_calibration_cauchy_oracle():
    # at p = 1 the unit scale is the median |Cauchy| = tan(pi/4) = 1
    scale = calibrate_scale(1.0, 128, 3000, Seed.from_int(22))
    assert abs(scale - math.tan(math.pi / 4)) < 0.05


def test_calibration_converges_with_trials():
    seed = Seed.from_int(23)
    a = calibrate_scale(0.25, 64, 4000, seed)
    b = calibrate_scale(0.25, 64, 8000, seed)
    assert abs(a - b) / a < 0.02


def test_calibration_table_roundtrip(tmp_path):
    table = CalibrationTable()
    table.put(0.25, 64, 1.5)
    table.put(0.25, 64, 2.5, sigma=256)
    scale = table.ensure(0.5, 32, Seed.from_int(3), trials=1000)
    path = tmp_path / "cal.json"
    table.save(path)
    loaded = CalibrationTable.load(path)
    assert loaded.get(0.25, 64) == 1.5
    assert loaded.get(0.25, 64, sigma=256) == 2.5
    assert loaded.get(0.5, 32) == scale


def make_sketcher(eps=0.25, sigma=256, seed=31, **kw) -> PStableSketcher:
    return PStableSketcher(eps, sigma, Seed.from_int(seed), calibration_trials=1000, **kw)


def test_sketch_zero_string_and_determinism():
    s = make_sketcher()
    sk = pstable_sketch(s, np.zeros(40, dtype=np.int64))
    assert not sk.values.any()
    again = make_sketcher()
    x = rand_symbols(np.random.default_rng(0), 50, 256)
    assert np.array_equal(pstable_sketch(s, x).values, pstable_sketch(again, x).values)


def test_sketch_linearity():
    rng = np.random.default_rng(1)
    s = make_sketcher()
    for _ in range(50):
        n = int(rng.integers(1, 80))
        x = rand_symbols(rng, n, 256)
        y = rand_symbols(rng, n, 256)
        sx, sy = pstable_sketch(s, x), pstable_sketch(s, y)
        direct = s.samples(n) @ (x - y).astype(np.float64)
        # stable tails are huge; tolerance is relative to operand magnitude
        tol = 1e-9 * (np.abs(sx.values) + np.abs(sy.values) + np.abs(direct) + 1.0)
        assert np.all(np.abs((sx.values - sy.values) - direct) <= tol)


def test_sketch_symbol_range_checked():
    s = make_sketcher(sigma=16)
    with pytest.raises(ValueError):
        pstable_sketch(s, [0, 16])


def test_estimate_identical_and_symmetry():
    rng = np.random.default_rng(2)
    s = make_sketcher()
    x = rand_symbols(rng, 64, 256)
    y = plant_flips(rng, x, 11, sigma=256)
    sx, sy = pstable_sketch(s, x), pstable_sketch(s, y)
    assert pstable_estimate(sx, sx).value == 0.0
    assert pstable_estimate(sx, sy).value == pstable_estimate(sy, sx).value


def test_estimate_mismatch_errors():
    s = make_sketcher()
    a = pstable_sketch(s, [1, 2, 3])
    b = pstable_sketch(s, [1, 2, 3], offset=2)
    with pytest.raises(ValueError):
        pstable_estimate(a, b)
    c = pstable_sketch(s, [1, 2])
    with pytest.raises(ValueError):
        pstable_estimate(a, c)


def test_estimate_quality_bytes_alphabet():
    # alphabet {0..255}, length 256, d = 40, eps = 0.25: within factor 1.25
    # on at least 60% of seeds
    rng = np.random.default_rng(3)
    n, d, eps = 256, 40, 0.25
    x = rand_symbols(rng, n, 256)
    y = plant_flips(rng, x, d, sigma=256)
    hits = 0
    seeds = 200
    for i in range(seeds):
        s = PStableSketcher(eps, 256, Seed.from_int(1000 + i), calibration_trials=1000)
        est = pstable_estimate(pstable_sketch(s, x), pstable_sketch(s, y))
        hits += within_factor(est.value, d, 1 + eps)
    assert hits / seeds >= 0.60


def test_estimate_quality_binary_with_amplification():
    # binary corpus grid point; 9-way median amplification reaches 95%
    rng = np.random.default_rng(4)
    n, d, eps = 256, 30, 0.25
    x = rand_symbols(rng, n, 2)
    y = plant_flips(rng, x, d, sigma=2)
    raw_hits = 0
    amp_hits = 0
    seeds = 100
    for i in range(seeds):
        vals = []
        for inst in range(9):
            s = PStableSketcher(
                eps, 2, Seed.from_int(5000 + i), stream_id=f"inst{inst}", calibration_trials=1000
            )
            vals.append(pstable_estimate(pstable_sketch(s, x), pstable_sketch(s, y)).value)
        raw_hits += within_factor(vals[0], d, 1 + eps)
        amp_hits += within_factor(float(np.median(vals)), d, 1 + eps)
    assert raw_hits / seeds >= 0.60
    assert amp_hits / seeds >= 0.95


def test_window_sketches_match_loop():
    rng = np.random.default_rng(5)
    s = make_sketcher(eps=0.5, sigma=2)
    t = rand_symbols(rng, 60, 2)
    starts = np.array([0, 3, 17, 40])
    got = s.sketch_windows(t, starts, 20)
    for j, st in enumerate(starts):
        assert np.allclose(got[:, j], pstable_sketch(s, t[st : st + 20]).values)

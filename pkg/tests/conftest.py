import numpy as np
import pytest

from hamstream.rng import Seed


def rand_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n).astype(np.int8)


def rand_symbols(rng: np.random.Generator, n: int, sigma: int) -> np.ndarray:
    return rng.integers(0, sigma, size=n).astype(np.int64)


def plant_flips(rng: np.random.Generator, base: np.ndarray, d: int, sigma: int = 2) -> np.ndarray:
    """Copy of base with exactly d positions changed."""
    out = base.copy()
    pos = rng.choice(len(base), size=d, replace=False)
    if sigma == 2:
        out[pos] ^= 1
    else:
        shift = rng.integers(1, sigma, size=d)
        out[pos] = (out[pos] + shift) % sigma
    return out


def within_factor(est: float, true: float, factor: float) -> bool:
    """est within the multiplicative [true/factor, true*factor] band."""
    if true == 0:
        return abs(est) < 1e-9
    if est <= 0:
        return False
    return true / factor - 1e-12 <= est <= true * factor + 1e-12


@pytest.fixture
def master_seed() -> Seed:
    return Seed.from_int(0xC0FFEE)

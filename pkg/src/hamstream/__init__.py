"""hamstream: approximate sliding-window Hamming distance toolkit."""

from .rng import Seed, SignSource, StableSource, sign_at, stable_at
from .oracle import hamming, sliding_hamming
from .seqstructs import RleEncoding, rle_decode, rle_encode, rle_size, x_period
from .sketch import (
    DistanceEstimate,
    Sketch,
    Sketcher,
    SuperSketch,
    combine_super,
    estimate_distance,
    median_amplify,
    sketch_block,
    update_sketch,
)

__version__ = "0.1.0"

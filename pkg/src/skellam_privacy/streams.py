"""Deterministic random-stream derivation from a single master seed.

Every stochastic component draws from a Generator obtained through
``derive_rng(master_seed, *path)``, where the path is a tuple of small
integers identifying the consumer (for the mean-estimation harness:
module index, then trial index, then client index). Distinct paths yield
independent streams; the same (seed, path) pair always replays the same
stream. Philox is counter-based, so the shared sign diagonal can be
regenerated identically on the client and the server sides.
"""

from __future__ import annotations

import numpy as np

# path roots for the experiment harness
STREAM_DATA = 0
STREAM_CLIENT = 1
STREAM_BASELINE = 2
STREAM_SAMPLER = 3


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Independent Generator for one (master seed, path) pair."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(seq))


def sign_vector(sign_seed: int, length: int) -> np.ndarray:
    """Uniform +-1 diagonal shared through its seed."""
    rng = derive_rng(int(sign_seed))
    return rng.integers(0, 2, size=length).astype(np.float64) * 2.0 - 1.0

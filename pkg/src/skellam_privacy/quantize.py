"""Real-to-integer client pipeline: clipping, rotation, and rounding.

Vectors are l2-clipped, scaled, zero-padded to a power of two, rotated by
a seeded randomized Hadamard transform (a diagonal of uniform +-1 signs
followed by the normalized Walsh-Hadamard transform), and stochastically
rounded to the integer grid. Rounding is retried until the squared norm
passes a probabilistic certificate, which caps the rounded vector's norm
and hence the sensitivity the accountant must assume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import sign_vector

DEFAULT_ROUNDING_BIAS = math.exp(-0.5)

_ROUNDING_RETRY_CAP = 1000


@dataclass(frozen=True)
class QuantizerConfig:
    """Parameters of the clip/rotate/round stage."""

    clip_norm: float
    scale: float
    rounding_bias: float = DEFAULT_ROUNDING_BIAS
    padded_dim: int = 1
    sign_seed: int = 0

    def __post_init__(self):
        if not (self.clip_norm > 0.0):
            raise ValueError(f"clip norm must be positive, got {self.clip_norm}")
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (0.0 < self.rounding_bias < 1.0):
            raise ValueError(f"rounding bias must lie in (0, 1), got {self.rounding_bias}")
        if self.padded_dim < 1 or self.padded_dim & (self.padded_dim - 1):
            raise ValueError(f"padded dimension must be a power of two, got {self.padded_dim}")


@dataclass(frozen=True)
class RoundedVector:
    """Integer vector with its certified squared-norm ceiling."""

    values: np.ndarray
    norm_bound: float
    attempts: int

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError(f"attempts must be >= 1, got {self.attempts}")
        if float(self.values @ self.values) > self.norm_bound:
            raise ValueError("rounded vector violates its certified norm bound")


def clip_l2(x: np.ndarray, c: float) -> np.ndarray:
    """min(1, c / ||x||) * x; vectors already inside the ball pass through."""
    if not (c > 0.0):
        raise ValueError(f"clip norm must be positive, got {c}")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector has non-finite entries")
    norm = float(np.linalg.norm(x))
    if norm <= c:
        return x.copy()
    return x * (c / norm)


def _walsh_hadamard(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform, O(d log d)."""
    a = x.copy()
    n = a.size
    h = 1
    while h < n:
        a = a.reshape(-1, 2 * h)
        left = a[:, :h].copy()
        right = a[:, h:].copy()
        a[:, :h] = left + right
        a[:, h:] = left - right
        h *= 2
    return a.reshape(n)


def _check_power_of_two(x: np.ndarray) -> int:
    n = x.size
    if n < 1 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    return n


def randomized_hadamard(x: np.ndarray, sign_seed: int) -> np.ndarray:
    """Seeded random rotation: signs from sign_seed, then H/sqrt(d).

    Exactly norm-preserving up to floating round-off; the same seed on
    client and server yields the identical sign diagonal.
    """
    x = np.asarray(x, dtype=np.float64)
    n = _check_power_of_two(x)
    signs = sign_vector(sign_seed, n)
    return _walsh_hadamard(x * signs) / math.sqrt(n)


def inverse_randomized_hadamard(y: np.ndarray, sign_seed: int) -> np.ndarray:
    """Inverse rotation: H/sqrt(d) first (H is symmetric), then the signs."""
    y = np.asarray(y, dtype=np.float64)
    n = _check_power_of_two(y)
    signs = sign_vector(sign_seed, n)
    return signs * (_walsh_hadamard(y) / math.sqrt(n))


def stochastic_round(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unbiased coordinate-wise rounding to the integer grid.

    Rounds x_i down with probability ceil(x_i) - x_i, up otherwise;
    exact integers are returned unchanged with probability 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("input vector has non-finite entries")
    if np.any(np.abs(x) >= 2 ** 62):
        raise ValueError("input magnitude exceeds the integer-exact range")
    floor = np.floor(x)
    frac = x - floor
    up = rng.random(x.shape) < frac
    return (floor + up).astype(np.int64)


def rounded_norm_bound(scaled_clip: float, d: int, beta: float) -> float:
    """Squared-norm ceiling enforced by conditional rounding:

        min((sc + sqrt(d))^2,
            (sc)^2 + d/4 + sqrt(2 log(1/beta)) * (sc + sqrt(d)/2)),

    the second branch holding with probability >= 1 - beta for a single
    stochastic rounding of any vector of norm sc.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    root_d = math.sqrt(d)
    hard = (scaled_clip + root_d) ** 2
    probabilistic = (
        scaled_clip * scaled_clip
        + d / 4.0
        + math.sqrt(2.0 * math.log(1.0 / beta)) * (scaled_clip + root_d / 2.0)
    )
    return min(hard, probabilistic)


def conditional_round(
    x: np.ndarray, config: QuantizerConfig, rng: np.random.Generator
) -> RoundedVector:
    """Stochastic rounding retried until the norm certificate holds.

    Every attempt draws fresh randomness and succeeds with probability at
    least 1 - rounding_bias, so the retry cap is hit with probability at
    most rounding_bias^1000 and treated as an internal error.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size != config.padded_dim:
        raise ValueError(f"expected length {config.padded_dim}, got {x.size}")
    sc = config.scale * config.clip_norm
    norm = float(np.linalg.norm(x))
    if norm > sc * (1.0 + 1e-9) + 1e-12:
        raise ValueError(f"input norm {norm} exceeds scaled clip {sc}")
    bound = rounded_norm_bound(sc, config.padded_dim, config.rounding_bias)
    for attempt in range(1, _ROUNDING_RETRY_CAP + 1):
        rounded = stochastic_round(x, rng)
        if float(rounded @ rounded) <= bound:
            return RoundedVector(rounded, bound, attempt)
    raise RuntimeError(
        f"conditional rounding failed {_ROUNDING_RETRY_CAP} times; "
        "this indicates a configuration error"
    )

"""Distributed aggregation pipeline over an ideal modular-sum channel.

Clients clip, scale, rotate, conditionally round, add their 1/n share of
Skellam noise, and reduce each coordinate modulo 2^b. The server receives
only the modular sum (the ideal secure-aggregation functionality; no
masking or key exchange is simulated), decodes it into the centered
signed range, unscales, and inverts the rotation. Overflow into the field
is by design: wraparound is modular arithmetic, never an error.

All field arithmetic runs in uint64, where addition wraps modulo 2^64 and
a final mask reduces to 2^b exactly (2^b divides 2^64), so the modular
sum matches a wide-integer reference bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantize import (
    DEFAULT_ROUNDING_BIAS,
    QuantizerConfig,
    clip_l2,
    conditional_round,
    inverse_randomized_hadamard,
    randomized_hadamard,
)
from .skellam import sample_skellam

_FULL_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def _field_mask(bit_width: int) -> np.uint64:
    if not (8 <= bit_width <= 64):
        raise ValueError(f"bit width must lie in [8, 64], got {bit_width}")
    if bit_width == 64:
        return _FULL_MASK
    return np.uint64((1 << bit_width) - 1)


@dataclass(frozen=True)
class AggregationConfig:
    """Parameters of the aggregation pipeline; `scale` is derived via
    ``solve_scale`` unless supplied explicitly."""

    clip_norm: float
    bit_width: int
    central_variance: float
    num_clients: int
    bound_multiplier: float
    rounding_bias: float
    padded_dim: int
    scale: float
    sign_seed: int

    def __post_init__(self):
        if not (self.clip_norm > 0.0):
            raise ValueError(f"clip norm must be positive, got {self.clip_norm}")
        _field_mask(self.bit_width)
        if self.central_variance < 0.0:
            raise ValueError(f"variance must be >= 0, got {self.central_variance}")
        if self.num_clients < 1:
            raise ValueError(f"need at least one client, got {self.num_clients}")
        if not (self.bound_multiplier > 0.0):
            raise ValueError(f"bound multiplier must be positive, got {self.bound_multiplier}")
        if not (0.0 < self.rounding_bias < 1.0):
            raise ValueError(f"rounding bias must lie in (0, 1), got {self.rounding_bias}")
        if self.padded_dim < 1 or self.padded_dim & (self.padded_dim - 1):
            raise ValueError(f"padded dimension must be a power of two, got {self.padded_dim}")
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def build(
        cls,
        *,
        clip_norm: float,
        bit_width: int,
        central_variance: float,
        num_clients: int,
        padded_dim: int,
        sign_seed: int,
        bound_multiplier: float = 3.0,
        rounding_bias: float = DEFAULT_ROUNDING_BIAS,
        scaled_field_bound: bool = True,
    ) -> "AggregationConfig":
        scale = solve_scale(
            clip_norm,
            num_clients,
            padded_dim,
            central_variance,
            bound_multiplier,
            bit_width,
            scaled_field_bound=scaled_field_bound,
        )
        return cls(
            clip_norm=clip_norm,
            bit_width=bit_width,
            central_variance=central_variance,
            num_clients=num_clients,
            bound_multiplier=bound_multiplier,
            rounding_bias=rounding_bias,
            padded_dim=padded_dim,
            scale=scale,
            sign_seed=sign_seed,
        )

    def quantizer(self) -> QuantizerConfig:
        return QuantizerConfig(
            clip_norm=self.clip_norm,
            scale=self.scale,
            rounding_bias=self.rounding_bias,
            padded_dim=self.padded_dim,
            sign_seed=self.sign_seed,
        )


@dataclass(frozen=True)
class FieldVector:
    """Vector of field elements, each in [0, 2^bit_width)."""

    values: np.ndarray
    bit_width: int

    def __post_init__(self):
        mask = _field_mask(self.bit_width)
        if self.values.dtype != np.uint64:
            raise ValueError(f"field values must be uint64, got {self.values.dtype}")
        if np.any(self.values & ~mask):
            raise ValueError("field values exceed the modulus")


def solve_scale(
    c: float,
    n: int,
    d: int,
    mu: float,
    k: float,
    b: int,
    *,
    scaled_field_bound: bool = True,
) -> float:
    """Scaling factor s fitting 2k standard deviations of the aggregate
    into the field of size 2^b.

    The aggregate's per-coordinate variance is bounded (in unscaled units)
    by sigma~^2 = c^2 n^2 / d + n / (4 s^2) + mu. The field holds scaled
    values, so the default solves 2^b = 2 k s sigma~(s), a quadratic in
    s^2 with one positive root:

        s^2 = (2^(2b) / (4 k^2) - n/4) / (c^2 n^2 / d + mu).

    ``scaled_field_bound=False`` instead solves the bound with sigma~ in
    unscaled units, 2^b = 2 k sigma~(s); exposed for curve comparison
    only, since that form shrinks s as b grows.
    """
    if not (c > 0.0 and mu >= 0.0 and k > 0.0):
        raise ValueError("clip norm and bound multiplier must be positive")
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 clients and d >= 1 dimensions")
    field = float(2**b)
    half_ratio = (field / (2.0 * k)) ** 2
    signal = c * c * float(n) * float(n) / d + mu
    if scaled_field_bound:
        num = half_ratio - n / 4.0
        if num <= 0.0:
            raise ValueError(
                f"bit width {b} infeasible: field 2^{b} cannot cover the "
                f"rounding noise of {n} clients at multiplier {k}"
            )
        return math.sqrt(num / signal)
    den = half_ratio - signal
    if den <= 0.0:
        raise ValueError(
            f"bit width {b} infeasible for the unscaled field bound"
        )
    return math.sqrt((n / 4.0) / den)


def signed_decode(v: int, b: int) -> int:
    """Field element to signed integer: v if v < 2^(b-1), else v - 2^b."""
    mask = int(_field_mask(b))
    v = int(v)
    if v < 0 or v > mask:
        raise ValueError(f"value {v} outside the field of width {b}")
    half = 1 << (b - 1)
    return v - (1 << b) if v >= half else v


def _signed_decode_array(values: np.ndarray, b: int) -> np.ndarray:
    half = np.uint64(1) << np.uint64(b - 1)
    shifted = values >= half
    out = values.astype(np.int64, copy=True)
    if b == 64:
        return out  # two's-complement reinterpretation is the decode
    out[shifted] -= np.int64(1) << np.int64(b)
    return out


def _to_field(values: np.ndarray, b: int) -> np.ndarray:
    mask = _field_mask(b)
    return values.astype(np.int64).view(np.uint64) & mask


def client_encode(
    x: np.ndarray, config: AggregationConfig, rng: np.random.Generator
) -> FieldVector:
    """One client's message: clip, scale, pad, rotate, round, noise, wrap.

    The local noise share has variance scale^2 * central_variance / n, so
    the n-client aggregate carries the full central variance. A zero
    central variance disables noise (used to isolate rounding error).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size > config.padded_dim:
        raise ValueError(f"input length {x.size} exceeds padded dimension {config.padded_dim}")
    clipped = clip_l2(x, config.clip_norm)
    padded = np.zeros(config.padded_dim)
    padded[: x.size] = config.scale * clipped
    rotated = randomized_hadamard(padded, config.sign_seed)
    rounded = conditional_round(rotated, config.quantizer(), rng)
    values = rounded.values
    if config.central_variance > 0.0:
        share = config.scale**2 * config.central_variance / config.num_clients
        values = values + sample_skellam(share, config.padded_dim, rng)
    return FieldVector(_to_field(values, config.bit_width), config.bit_width)


def secure_sum(messages: list[FieldVector], b: int) -> FieldVector:
    """Coordinate-wise modular sum: the ideal aggregation functionality."""
    if not messages:
        raise ValueError("need at least one message")
    length = messages[0].values.size
    for m in messages:
        if m.bit_width != b:
            raise ValueError(f"bit width mismatch: {m.bit_width} != {b}")
        if m.values.size != length:
            raise ValueError("message lengths differ")
    total = np.zeros(length, dtype=np.uint64)
    for m in messages:
        total += m.values  # uint64 wraps mod 2^64, a multiple of 2^b
    return FieldVector(total & _field_mask(b), b)


def server_decode(
    z: FieldVector,
    config: AggregationConfig,
    expected_clients: int,
    original_dim: int | None = None,
) -> np.ndarray:
    """Decode the modular sum into an estimate of the sum of clipped inputs.

    Signed-decodes each coordinate, unscales, inverts the rotation, and
    truncates the zero padding. Returns the SUM estimate; divide by n for
    the mean. Dropout is not modeled, so the client count must match.
    """
    if expected_clients != config.num_clients:
        raise ValueError(
            f"expected {config.num_clients} clients, got {expected_clients}; "
            "dropout is not modeled"
        )
    if z.bit_width != config.bit_width:
        raise ValueError(f"bit width mismatch: {z.bit_width} != {config.bit_width}")
    signed = _signed_decode_array(z.values, config.bit_width)
    unscaled = signed.astype(np.float64) / config.scale
    rotated_back = inverse_randomized_hadamard(unscaled, config.sign_seed)
    dim = config.padded_dim if original_dim is None else int(original_dim)
    if not (1 <= dim <= config.padded_dim):
        raise ValueError(f"original dimension {dim} outside (0, {config.padded_dim}]")
    return rotated_back[:dim]

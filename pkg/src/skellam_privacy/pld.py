"""Privacy-loss-distribution accounting for the scalar Skellam mechanism.

For sensitivity D and noise variance mu the privacy loss of an output X
drawn from the centered law is

    z(X) = log I_{X-D}(mu) - log I_X(mu),        X ~ Sk_{0, mu},

and a mechanism is (eps, delta)-DP iff delta >= E[1 - e^(eps - z)]_+.
The loss values are discretized onto a uniform grid, rounding every loss
UP to the next grid point, so each delta query upper-bounds the true
hockey-stick divergence. T-fold composition convolves the grid masses via
a single padded FFT raised to the T-th power; the truncated pmf tail is
carried as mass at +infinity and composes as 1 - (1 - m)^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import special

from .bessel import consecutive_log_ratios

DEFAULT_GRID = 1e-4
DEFAULT_TAIL_MASS = 1e-12

_FFT_POINT_CAP = 2 ** 30
_NORMALIZATION_SLACK = 1e-12


@dataclass(frozen=True)
class PrivacyLossDistribution:
    """Discretized privacy-loss law: grid masses plus mass at +infinity.

    masses[i] is the probability of loss (i - origin_index) * grid_spacing;
    infinite_mass pessimistically absorbs the truncated pmf tail.
    """

    grid_spacing: float
    origin_index: int
    masses: np.ndarray
    infinite_mass: float

    def __post_init__(self):
        if not (self.grid_spacing > 0.0):
            raise ValueError(f"grid spacing must be positive, got {self.grid_spacing}")
        if not (0.0 <= self.infinite_mass <= 1.0):
            raise ValueError(f"infinite mass must lie in [0, 1], got {self.infinite_mass}")
        if np.any(self.masses < 0.0):
            raise ValueError("masses must be non-negative")
        total = float(self.masses.sum()) + self.infinite_mass
        if abs(total - 1.0) > _NORMALIZATION_SLACK:
            raise ValueError(f"masses plus infinite mass sum to {total}, not 1")

    def loss_values(self) -> np.ndarray:
        return (np.arange(len(self.masses)) - self.origin_index) * self.grid_spacing

    def mean(self) -> float:
        """Mean of the finite part (the KL divergence when the tail is 0)."""
        return float(self.masses @ self.loss_values())


def _pmf_window(mu: float, tail_mass: float) -> tuple[int, np.ndarray, float]:
    """Smallest half-width W with Sk(0, mu) mass outside [-W, W] <= tail_mass."""
    w_max = int(math.ceil(mu + 20.0 * math.sqrt(mu) + 20.0))
    pmf_half = special.ive(np.arange(w_max + 1, dtype=np.float64), mu)
    while True:
        tail = 1.0 - (2.0 * pmf_half.sum() - pmf_half[0])
        if tail <= tail_mass:
            break
        w_max = int(w_max * 1.5) + 10
        pmf_half = special.ive(np.arange(w_max + 1, dtype=np.float64), mu)
    inside = 2.0 * np.cumsum(pmf_half) - pmf_half[0]
    w = int(np.searchsorted(inside, 1.0 - tail_mass) )
    w = min(w, w_max)
    pmf = np.concatenate([pmf_half[w:0:-1], pmf_half[: w + 1]])
    tail = max(0.0, 1.0 - pmf.sum())
    return w, pmf, tail


def skellam_pld(
    delta_sens: int,
    mu: float,
    tail_mass: float = DEFAULT_TAIL_MASS,
    grid_spacing: float = DEFAULT_GRID,
) -> PrivacyLossDistribution:
    """Discretized privacy-loss law of the scalar Skellam mechanism.

    Enumerates outputs X over the smallest window [-W, W] holding all but
    tail_mass of Sk(0, mu), assigns pmf(X) to the loss z(X) rounded up to
    the grid, and books the remaining tail as infinite mass.
    """
    if delta_sens < 1 or int(delta_sens) != delta_sens:
        raise ValueError(f"sensitivity must be a positive integer, got {delta_sens}")
    if not (0.0 < tail_mass <= 1e-6):
        raise ValueError(f"tail mass must lie in (0, 1e-6], got {tail_mass}")
    if not (mu > 0.0) or not math.isfinite(mu):
        raise ValueError(f"variance must be positive, got {mu}")
    d = int(delta_sens)
    w, pmf, tail = _pmf_window(mu, tail_mass)

    # loss z(X) as a cumulative sum of consecutive-order log ratios:
    # log I_{j-1} - log I_j equals +ratio(j) for j >= 1 and -ratio(1-j)
    # for j <= 0, so z(X) = sum_{j = X-d+1}^{X} step(j).
    ratios = consecutive_log_ratios(w + d, mu)  # ratios[k-1] = log(I_{k-1}/I_k)
    j = np.arange(-w - d + 1, w + 1)
    steps = np.where(j >= 1, ratios[np.clip(j - 1, 0, None)], -ratios[np.clip(-j, 0, None)])
    prefix = np.concatenate([[0.0], np.cumsum(steps)])

    def cum(upto: np.ndarray) -> np.ndarray:
        return prefix[upto - (-w - d + 1) + 1]

    xs = np.arange(-w, w + 1)
    losses = cum(xs) - cum(xs - d)

    idx = np.ceil(losses / grid_spacing - 1e-12).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    masses = np.zeros(hi - lo + 1)
    np.add.at(masses, idx - lo, pmf)
    return PrivacyLossDistribution(grid_spacing, -lo, masses, tail)


def _power_in_place(values: np.ndarray, exponent: int) -> np.ndarray:
    out = np.ones_like(values)
    while exponent:
        if exponent & 1:
            np.multiply(out, values, out=out)
        exponent >>= 1
        if exponent:
            np.multiply(values, values, out=values)
    return out


def pld_compose(
    pld: PrivacyLossDistribution, rounds: int, *, point_cap: int = _FFT_POINT_CAP
) -> PrivacyLossDistribution:
    """T-fold self-convolution via one padded FFT raised to the T-th power.

    The transform length is the next power of two covering the composed
    support, so no circular wraparound can occur; lengths beyond
    `point_cap` raise instead of silently degrading.
    """
    if rounds < 1 or int(rounds) != rounds:
        raise ValueError(f"rounds must be a positive integer, got {rounds}")
    rounds = int(rounds)
    if rounds == 1:
        return PrivacyLossDistribution(
            pld.grid_spacing, pld.origin_index, pld.masses.copy(), pld.infinite_mass
        )
    support = len(pld.masses)
    needed = rounds * (support - 1) + 1
    length = 1 << (needed - 1).bit_length()
    if length > point_cap:
        raise MemoryError(
            f"composition needs a transform of {length} points, above the cap {point_cap}"
        )
    spectrum = scipy.fft.rfft(pld.masses, length)
    spectrum = _power_in_place(spectrum, rounds)
    composed = scipy.fft.irfft(spectrum, length)[:needed]
    del spectrum
    np.maximum(composed, 0.0, out=composed)
    # the finite part must carry exactly (1 - m)^T; rescale away FFT roundoff
    finite_target = (1.0 - pld.infinite_mass) ** rounds
    total = composed.sum()
    if total > 0.0:
        composed *= finite_target / total
    return PrivacyLossDistribution(
        pld.grid_spacing,
        rounds * pld.origin_index,
        composed,
        1.0 - finite_target,
    )


def pld_delta(pld: PrivacyLossDistribution, epsilon: float) -> float:
    """Hockey-stick divergence infinite_mass + E[1 - e^(eps - Z)]_+."""
    z = pld.loss_values()
    with np.errstate(over="ignore"):
        contrib = -np.expm1(np.minimum(epsilon - z, 0.0))
    value = pld.infinite_mass + float(pld.masses @ contrib)
    return min(max(value, 0.0), 1.0)


def pld_epsilon(
    pld: PrivacyLossDistribution, delta: float, *, rel_tol: float = 1e-4
) -> float:
    """Smallest epsilon >= 0 with pld_delta(pld, epsilon) <= delta.

    Exists only when the infinite mass stays below delta; exploits
    monotonicity of the delta query for a bracketing bisection resolved to
    `rel_tol` relative, returning the upper end so the round trip
    pld_delta(pld, result) <= delta always holds.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if pld.infinite_mass >= delta:
        raise ValueError(
            f"no finite epsilon: infinite mass {pld.infinite_mass} >= delta {delta}"
        )
    if pld_delta(pld, 0.0) <= delta:
        return 0.0
    hi = pld.grid_spacing
    max_loss = float(pld.loss_values()[-1])
    while pld_delta(pld, hi) > delta:
        hi *= 2.0
        if hi > max_loss:
            # delta(max_loss) = infinite_mass < delta, so hi is an upper end
            hi = max_loss
            break
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if pld_delta(pld, mid) > delta:
            lo = mid
        else:
            hi = mid
    return hi


def analytic_gaussian_delta(epsilon: float, l2_sens: float, sigma: float) -> float:
    """Exact delta(epsilon) of the Gaussian mechanism with std sigma:

        Phi(D/(2 sigma) - eps sigma/D) - e^eps Phi(-D/(2 sigma) - eps sigma/D).
    """
    if not (sigma > 0.0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not (l2_sens > 0.0):
        raise ValueError(f"sensitivity must be positive, got {l2_sens}")
    a = l2_sens / (2.0 * sigma)
    b = epsilon * sigma / l2_sens
    value = special.ndtr(a - b) - math.exp(epsilon) * special.ndtr(-a - b)
    return min(max(float(value), 0.0), 1.0)


def calibrate_gaussian_sigma(
    target_eps: float, delta: float, l2_sens: float, *, rel_tol: float = 1e-6
) -> float:
    """Smallest Gaussian std sigma with delta(target_eps) <= delta."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not (target_eps > 0.0):
        raise ValueError(f"target epsilon must be positive, got {target_eps}")
    lo, hi = 1e-10, 1.0
    while analytic_gaussian_delta(target_eps, l2_sens, hi) > delta:
        lo = hi
        hi *= 2.0
        if hi > 1e15:
            raise RuntimeError("sigma search failed to bracket the target")
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if analytic_gaussian_delta(target_eps, l2_sens, mid) > delta:
            lo = mid
        else:
            hi = mid
    return hi

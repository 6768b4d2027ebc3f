"""Closed-form Renyi-DP accounting for the Skellam and Gaussian mechanisms.

The Skellam bound at integer order a >= 2, l1/l2 sensitivities D1 >= D2,
unscaled noise variance mu, and scaling factor s (added noise variance
s^2 mu) is

    eps(a) <= a D2^2 / (2 mu)
              + min((2a-1) D2^2 / (4 s^2 mu^2) + 3 D1 / (2 s^3 mu^2),
                    3 D1 / (2 s mu)).

One code path evaluates that expression; the unscaled (s=1) and scalar
(D1=D2=D) variants delegate to it, so the stated reductions hold
bit-for-bit. The bound is valid for integer orders only, hence the
default order grid {2,...,256}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

DEFAULT_ORDERS: tuple[int, ...] = tuple(range(2, 257))

_MU_SEARCH_FLOOR = 1e-6
_MU_SEARCH_CEIL = 1e12


@dataclass(frozen=True)
class MechanismSpec:
    """Sensitivities, unscaled noise variance, and quantization scale.

    `variance` is in unscaled units: the mechanism adds discrete noise of
    variance scale^2 * variance to data multiplied by `scale`.
    """

    l1_sensitivity: float
    l2_sensitivity: float
    variance: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.l2_sensitivity > 0.0):
            raise ValueError(f"l2 sensitivity must be positive, got {self.l2_sensitivity}")
        if self.l1_sensitivity < self.l2_sensitivity:
            raise ValueError(
                f"l1 sensitivity {self.l1_sensitivity} below l2 sensitivity "
                f"{self.l2_sensitivity}; the l1 norm always dominates"
            )
        if not (self.variance > 0.0):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class RdpCurve:
    """Map from integer Renyi order to an epsilon bound at that order."""

    orders: tuple[int, ...]
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if len(self.orders) != len(self.epsilons):
            raise ValueError("orders and epsilons must have equal length")
        if len(self.orders) == 0:
            raise ValueError("curve must contain at least one order")
        if any(o <= 1 for o in self.orders):
            raise ValueError("all orders must exceed 1")
        if list(self.orders) != sorted(set(self.orders)):
            raise ValueError("orders must be strictly increasing")


class DpBound(NamedTuple):
    """An (epsilon, delta)-DP bound plus the order that realized it."""

    epsilon: float
    order: int


def _require_integer_order(alpha) -> int:
    if int(alpha) != alpha or alpha < 2:
        raise ValueError(f"order must be an integer >= 2, got {alpha}")
    return int(alpha)


def skellam_rdp_scaled(alpha: int, spec: MechanismSpec) -> float:
    """Skellam RDP bound at integer order `alpha` for a scaled mechanism."""
    a = float(_require_integer_order(alpha))
    d1, d2 = spec.l1_sensitivity, spec.l2_sensitivity
    mu, s = spec.variance, spec.scale
    lead = a * d2 * d2 / (2.0 * mu)
    branch1 = (2.0 * a - 1.0) * d2 * d2 / (4.0 * s * s * mu * mu)
    branch1 += 3.0 * d1 / (2.0 * s ** 3 * mu * mu)
    branch2 = 3.0 * d1 / (2.0 * s * mu)
    return lead + min(branch1, branch2)


def skellam_rdp_multidim(alpha: int, spec: MechanismSpec) -> float:
    """Unscaled (scale == 1) multi-dimensional Skellam RDP bound."""
    if spec.scale != 1.0:
        raise ValueError(f"expected scale 1, got {spec.scale}; use skellam_rdp_scaled")
    return skellam_rdp_scaled(alpha, spec)


def skellam_rdp_scalar(alpha: int, delta_sens: int, mu: float) -> float:
    """Scalar Skellam RDP bound: sensitivity D, noise variance mu."""
    if delta_sens <= 0 or int(delta_sens) != delta_sens:
        raise ValueError(f"sensitivity must be a positive integer, got {delta_sens}")
    d = float(delta_sens)
    return skellam_rdp_scaled(
        alpha, MechanismSpec(l1_sensitivity=d, l2_sensitivity=d, variance=mu)
    )


def gaussian_rdp(alpha: float, l2_sens: float, mu: float) -> float:
    """Gaussian (and discrete Gaussian) RDP: a * D^2 / (2 mu), any a > 1."""
    if not (alpha > 1.0):
        raise ValueError(f"order must exceed 1, got {alpha}")
    if not (l2_sens > 0.0):
        raise ValueError(f"sensitivity must be positive, got {l2_sens}")
    if not (mu > 0.0):
        raise ValueError(f"variance must be positive, got {mu}")
    return alpha * l2_sens * l2_sens / (2.0 * mu)


def l1_from_l2(l2_sens: float, dim: int) -> float:
    """Generic l1 bound D2 * min(sqrt(dim), D2); the D2^2 branch needs
    integer-valued coordinates."""
    if dim < 1 or int(dim) != dim:
        raise ValueError(f"dimension must be a positive integer, got {dim}")
    if not (l2_sens > 0.0):
        raise ValueError(f"sensitivity must be positive, got {l2_sens}")
    return l2_sens * min(math.sqrt(dim), l2_sens)


def skellam_rdp_curve(spec: MechanismSpec, orders: Sequence[int] = DEFAULT_ORDERS) -> RdpCurve:
    """Skellam RDP curve over an integer order grid."""
    orders = tuple(int(a) for a in orders)
    return RdpCurve(orders, tuple(skellam_rdp_scaled(a, spec) for a in orders))


def gaussian_rdp_curve(
    l2_sens: float, mu: float, orders: Sequence[int] = DEFAULT_ORDERS
) -> RdpCurve:
    """Gaussian RDP curve over an integer order grid."""
    orders = tuple(int(a) for a in orders)
    return RdpCurve(orders, tuple(gaussian_rdp(a, l2_sens, mu) for a in orders))


def compose(curves: Sequence[RdpCurve]) -> RdpCurve:
    """Pointwise sum of curves sharing one order grid."""
    if len(curves) == 0:
        raise ValueError("need at least one curve")
    orders = curves[0].orders
    for c in curves[1:]:
        if c.orders != orders:
            raise ValueError("curves must share the same order grid")
    eps = [0.0] * len(orders)
    for c in curves:
        for i, e in enumerate(c.epsilons):
            eps[i] += e
    return RdpCurve(orders, tuple(eps))


def compose_repeated(curve: RdpCurve, rounds: int) -> RdpCurve:
    """T-fold self-composition: epsilons scale by T."""
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    return RdpCurve(curve.orders, tuple(rounds * e for e in curve.epsilons))


def rdp_to_dp(curve: RdpCurve, delta: float) -> DpBound:
    """Convert an RDP curve to an (epsilon, delta)-DP bound.

    Minimizes eps(a) + log(1/(a delta))/(a-1) + log(1 - 1/a) over the
    curve's order grid and reports the minimizing order.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    best = DpBound(math.inf, -1)
    for a, e in zip(curve.orders, curve.epsilons):
        value = e + math.log(1.0 / (a * delta)) / (a - 1.0) + math.log(1.0 - 1.0 / a)
        if value < best.epsilon:
            best = DpBound(value, a)
    return best


def calibrate_mu(
    target_eps: float,
    delta: float,
    *,
    l1_sensitivity: float,
    l2_sensitivity: float,
    scale: float = 1.0,
    rounds: int = 1,
    orders: Sequence[int] = DEFAULT_ORDERS,
    rel_tol: float = 1e-3,
) -> float:
    """Smallest unscaled variance mu meeting a target (eps, delta) budget.

    Bisection on log mu over [1e-6, 1e12]; the composed converted epsilon
    is monotone decreasing in mu, so the bracket is valid. Raises if even
    the upper search bound cannot reach the target.
    """
    if not (target_eps > 0.0):
        raise ValueError(f"target epsilon must be positive, got {target_eps}")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")

    def eps_at(mu: float) -> float:
        spec = MechanismSpec(l1_sensitivity, l2_sensitivity, mu, scale)
        curve = compose_repeated(skellam_rdp_curve(spec, orders), rounds)
        return rdp_to_dp(curve, delta).epsilon

    lo, hi = _MU_SEARCH_FLOOR, _MU_SEARCH_CEIL
    if eps_at(hi) > target_eps:
        raise ValueError(
            f"target epsilon {target_eps} unreachable even at mu = {hi}"
        )
    if eps_at(lo) <= target_eps:
        return lo
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if eps_at(mid) <= target_eps:
            hi = mid
        else:
            lo = mid
    return hi

"""Cross-module verification suites behind the `verify` CLI command.

Each suite exercises one mathematical guarantee end to end and reports a
machine-readable pass/fail record. A quick mode shrinks the grids and
sample counts for smoke testing.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .bessel import log_bessel_ratio, ratio_sinh_bound
from .pld import pld_compose, pld_epsilon, skellam_pld
from .rdp import rdp_to_dp, skellam_rdp_curve, skellam_rdp_scalar, MechanismSpec
from .skellam import (
    SkellamParams,
    log_bessel_ratio_product,
    ratio_product_ceiling,
    sample_skellam,
    skellam_log_pmf,
    skellam_renyi_divergence,
)
from .streams import STREAM_SAMPLER, derive_rng


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def chi_square_fit(
    draws: np.ndarray, params: SkellamParams, half_width: int
) -> float:
    """Goodness-of-fit p-value of integer draws against the Skellam pmf.

    Bins are individual integers within +-half_width of the mean plus two
    pooled tails; bins with expected count below 5 are merged into the
    tails before the test.
    """
    n = len(draws)
    ks = np.arange(params.shift - half_width, params.shift + half_width + 1)
    probs = np.exp(skellam_log_pmf(ks, params))
    lower_tail = max(0.0, 1.0 - probs.sum())
    observed = np.array([(draws == k).sum() for k in ks], dtype=np.float64)
    in_tail = len(draws) - observed.sum()
    expected = probs * n
    # pool the explicit tails with any sparse interior bins
    keep = expected >= 5.0
    tail_exp = lower_tail * n + expected[~keep].sum()
    tail_obs = in_tail + observed[~keep].sum()
    f_exp = np.append(expected[keep], tail_exp)
    f_obs = np.append(observed[keep], tail_obs)
    f_exp *= f_obs.sum() / f_exp.sum()
    return float(stats.chisquare(f_obs, f_exp).pvalue)


def check_divergence_bound(quick: bool = False) -> CheckResult:
    """Closed-form order-a bound dominates the numeric divergence."""
    start = time.time()
    alphas = (2, 8, 64) if quick else (2, 4, 8, 16, 32, 64)
    shifts = (1, 8) if quick else (1, 2, 4, 8)
    mus = (4.0, 100.0) if quick else (4.0, 16.0, 100.0, 1e4)
    worst = math.inf
    for a in alphas:
        for d in shifts:
            for mu in mus:
                gap = skellam_rdp_scalar(a, d, mu) - skellam_renyi_divergence(a, d, mu)
                worst = min(worst, gap)
    return CheckResult(
        "divergence_bound",
        worst >= 0.0,
        f"smallest bound-minus-numeric gap {worst:.3e}",
        time.time() - start,
    )


def check_ratio_product_ceiling(quick: bool = False) -> CheckResult:
    """The per-point ratio product never exceeds its uniform ceiling."""
    start = time.time()
    alphas = (2, 4) if quick else (2, 3, 4, 8)
    shifts = (1, 2) if quick else (1, 2, 4)
    mus = (10.0, 50.0) if quick else (10.0, 50.0, 1e3)
    worst = math.inf
    for a in alphas:
        for d in shifts:
            for mu in mus:
                ceiling = ratio_product_ceiling(a, d, mu)
                for x in range(-5 * a * d, 5 * a * d + 1):
                    gap = ceiling - log_bessel_ratio_product(x, a, d, mu)
                    worst = min(worst, gap)
    return CheckResult(
        "ratio_product_ceiling",
        worst >= 0.0,
        f"smallest ceiling-minus-value gap {worst:.3e}",
        time.time() - start,
    )


def check_ratio_bracket(quick: bool = False) -> CheckResult:
    """Consecutive-order log ratios stay inside the asinh envelope."""
    start = time.time()
    orders = range(1, 17) if quick else range(1, 65)
    xs = (1.0, 100.0) if quick else (0.5, 1.0, 2.0, 10.0, 100.0, 1e4)
    violations = 0
    for x in xs:
        for nu in orders:
            value = log_bessel_ratio(nu, x)
            lo = math.asinh(ratio_sinh_bound(nu, x, 0))
            hi = math.asinh(ratio_sinh_bound(nu, x, 2))
            if not (lo <= value <= hi):
                violations += 1
    return CheckResult(
        "ratio_bracket",
        violations == 0,
        f"{violations} bracket violations",
        time.time() - start,
    )


def check_pld_rdp_ordering(quick: bool = False) -> CheckResult:
    """PLD-based epsilon never exceeds the converted RDP epsilon."""
    start = time.time()
    delta = 1e-6
    rounds = (1, 30) if quick else (1, 30, 1000)
    ok = True
    details = []
    for mu in (25.0, 100.0):
        single = skellam_pld(1, mu)
        spec = MechanismSpec(1.0, 1.0, mu)
        for t in rounds:
            eps_pld = pld_epsilon(pld_compose(single, t), delta)
            curve = skellam_rdp_curve(spec)
            eps_rdp = rdp_to_dp(
                type(curve)(curve.orders, tuple(t * e for e in curve.epsilons)), delta
            ).epsilon
            ok = ok and math.isfinite(eps_pld) and eps_pld <= eps_rdp
            details.append(f"mu={mu:g},T={t}: {eps_pld:.3f}<={eps_rdp:.3f}")
    return CheckResult(
        "pld_rdp_ordering", ok, "; ".join(details), time.time() - start
    )


def check_sum_closure(quick: bool = False, seed: int = 20240) -> CheckResult:
    """Sums of independent draws follow the law with summed variance."""
    start = time.time()
    trials = 100_000 if quick else 1_000_000
    rng = derive_rng(seed, STREAM_SAMPLER)
    parts = sum(sample_skellam(1.0, trials, rng) for _ in range(10))
    p = chi_square_fit(parts, SkellamParams(0, 10.0), half_width=15)
    return CheckResult(
        "sum_closure",
        p > 1e-3,
        f"chi-square p = {p:.4f} for 10-fold sums against variance 10",
        time.time() - start,
    )


ALL_CHECKS = (
    check_divergence_bound,
    check_ratio_product_ceiling,
    check_ratio_bracket,
    check_pld_rdp_ordering,
    check_sum_closure,
)


def run_all(quick: bool = False) -> list[CheckResult]:
    return [check(quick) for check in ALL_CHECKS]


def results_payload(results: list[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }

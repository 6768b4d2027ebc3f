"""Distributed mean estimation experiments and report emission.

One experiment: n unit-norm-scaled client vectors on the radius-c sphere
are aggregated through the modular pipeline, the decoded sum is divided
by n, and the error is reported as ||estimate - true mean||^2 / dim. The
baseline adds continuous Gaussian noise, calibrated through the exact
analytic delta(epsilon) expression, to the same sum at the same privacy
budget.

Noise variance and scale are planned jointly: the rounding certificate
inflates the sensitivity the accountant must assume, the calibrated
variance feeds the field-size heuristic, and the resulting scale feeds
back into the certificate. The loop converges in a few iterations because
the couplings are weak.

Randomness derivation: every stream comes from ``derive_rng(seed, *path)``
with paths (STREAM_DATA,) for data generation, (STREAM_CLIENT, i) for
client i inside one trial, and (STREAM_BASELINE, t) for baseline trial t.
Sweeps fold (point index, trial index) into per-trial master seeds first.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .pld import analytic_gaussian_delta, calibrate_gaussian_sigma
from .quantize import DEFAULT_ROUNDING_BIAS, clip_l2, rounded_norm_bound
from .rdp import (
    DEFAULT_ORDERS,
    MechanismSpec,
    calibrate_mu,
    compose_repeated,
    l1_from_l2,
    rdp_to_dp,
    skellam_rdp_curve,
)
from .secagg import AggregationConfig, client_encode, secure_sum, server_decode, solve_scale
from .streams import STREAM_BASELINE, STREAM_CLIENT, STREAM_DATA, derive_rng

DEFAULT_BOUND_MULTIPLIER = 3.0


@dataclass(frozen=True)
class DmeReport:
    """Outcome of one sweep point: mechanism error vs. baseline error."""

    config: dict
    epsilon: float
    delta: float
    bit_width: int
    mse: float
    baseline_mse: float
    trials: int
    mse_ci95: float
    baseline_mse_ci95: float
    failure: str | None = None


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise ValueError(f"need a positive dimension, got {n}")
    return 1 << (n - 1).bit_length()


def generate_sphere_data(n: int, dim: int, c: float, seed: int) -> np.ndarray:
    """n vectors drawn uniformly from the radius-c sphere in dim dimensions."""
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 vectors and dim >= 1")
    rng = derive_rng(seed, STREAM_DATA)
    raw = rng.standard_normal((n, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * (c / norms)


def plan_dme_config(
    *,
    dim: int,
    num_clients: int,
    clip_norm: float,
    bit_width: int,
    target_epsilon: float,
    dp_delta: float,
    sign_seed: int,
    bound_multiplier: float = DEFAULT_BOUND_MULTIPLIER,
    rounding_bias: float = DEFAULT_ROUNDING_BIAS,
    rounds: int = 1,
    scaled_field_bound: bool = True,
    max_iterations: int = 8,
) -> tuple[AggregationConfig, float]:
    """Jointly pick (variance, scale) for a target budget.

    Returns the aggregation config and the achieved converted epsilon of
    the final plan (always <= the target up to calibration tolerance).
    """
    padded = next_power_of_two(dim)
    c, n, k, b = clip_norm, num_clients, bound_multiplier, bit_width
    scale = solve_scale(c, n, padded, 0.0, k, b, scaled_field_bound=scaled_field_bound)
    mu = None
    for _ in range(max_iterations):
        scaled_l2 = math.sqrt(rounded_norm_bound(scale * c, padded, rounding_bias))
        l2 = scaled_l2 / scale
        l1 = l1_from_l2(scaled_l2, padded) / scale
        mu_new = calibrate_mu(
            target_epsilon,
            dp_delta,
            l1_sensitivity=l1,
            l2_sensitivity=l2,
            scale=scale,
            rounds=rounds,
        )
        scale_new = solve_scale(c, n, padded, mu_new, k, b, scaled_field_bound=scaled_field_bound)
        converged = mu is not None and abs(mu_new - mu) <= 1e-3 * mu
        converged = converged and abs(scale_new - scale) <= 1e-3 * scale
        mu, scale = mu_new, scale_new
        if converged:
            break
    config = AggregationConfig(
        clip_norm=c,
        bit_width=b,
        central_variance=mu,
        num_clients=n,
        bound_multiplier=k,
        rounding_bias=rounding_bias,
        padded_dim=padded,
        scale=scale,
        sign_seed=sign_seed,
    )
    achieved = achieved_epsilon(config, dp_delta, rounds=rounds)
    return config, achieved


def achieved_epsilon(config: AggregationConfig, dp_delta: float, rounds: int = 1) -> float:
    """Converted epsilon of a planned config, inflation included."""
    scaled_l2 = math.sqrt(
        rounded_norm_bound(config.scale * config.clip_norm, config.padded_dim, config.rounding_bias)
    )
    spec = MechanismSpec(
        l1_sensitivity=l1_from_l2(scaled_l2, config.padded_dim) / config.scale,
        l2_sensitivity=scaled_l2 / config.scale,
        variance=config.central_variance,
        scale=config.scale,
    )
    curve = compose_repeated(skellam_rdp_curve(spec, DEFAULT_ORDERS), rounds)
    return rdp_to_dp(curve, dp_delta).epsilon


def run_dme_trial(config: AggregationConfig, data: np.ndarray, master_seed: int) -> float:
    """One end-to-end aggregation; returns ||mean est - true mean||^2 / dim."""
    n, dim = data.shape
    if n != config.num_clients:
        raise ValueError(f"config expects {config.num_clients} clients, data has {n}")
    messages = [
        client_encode(data[i], config, derive_rng(master_seed, STREAM_CLIENT, i))
        for i in range(n)
    ]
    total = secure_sum(messages, config.bit_width)
    estimate = server_decode(total, config, n, original_dim=dim) / n
    true_mean = data.mean(axis=0)
    return float(np.mean((estimate - true_mean) ** 2))


def _gaussian_trial(data: np.ndarray, sigma: float, rng: np.random.Generator, c: float) -> float:
    n, dim = data.shape
    clipped_sum = np.sum([clip_l2(row, c) for row in data], axis=0)
    estimate = (clipped_sum + rng.normal(0.0, sigma, dim)) / n
    true_mean = data.mean(axis=0)
    return float(np.mean((estimate - true_mean) ** 2))


def run_gaussian_baseline(
    data: np.ndarray,
    target_eps: float,
    delta: float,
    c: float,
    n: int,
    trials: int,
    seed: int,
) -> float:
    """Mean MSE of the central Gaussian baseline at a matched budget.

    Sigma comes from bisection on the analytic delta(epsilon) expression
    with sensitivity c; noise is added to the sum, then divided by n.
    """
    if data.shape[0] != n:
        raise ValueError(f"expected {n} rows, got {data.shape[0]}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sigma = calibrate_gaussian_sigma(target_eps, delta, c)
    mses = [
        _gaussian_trial(data, sigma, derive_rng(seed, STREAM_BASELINE, t), c)
        for t in range(trials)
    ]
    return float(np.mean(mses))


def _ci95(values: list[float]) -> float:
    if len(values) < 2:
        return math.nan
    return 1.96 * float(np.std(values, ddof=1)) / math.sqrt(len(values))


def _point_seed(seed: int, point: int, trial: int) -> int:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(point, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def default_dp_delta(num_clients: int) -> float:
    """1/n^2 rounded to the nearest power of ten."""
    return 10.0 ** round(math.log10(1.0 / num_clients**2))


def run_dme_sweep(
    *,
    bit_widths: list[int],
    dims: list[int],
    client_counts: list[int],
    epsilons: list[float],
    clip_norm: float = 10.0,
    trials: int = 10,
    seed: int = 0,
    dp_delta: float | None = None,
    bound_multiplier: float = DEFAULT_BOUND_MULTIPLIER,
    rounding_bias: float = DEFAULT_ROUNDING_BIAS,
    scaled_field_bound: bool = True,
) -> list[DmeReport]:
    """Grid sweep over (bit width, dimension, clients, epsilon).

    Each trial draws a fresh dataset; the baseline shares the dataset and
    the trial index. Infeasible points are recorded with their failure
    and the sweep continues. Reports come back sorted by grid key.
    """
    grid = [
        (b, d, n, eps)
        for b in bit_widths
        for d in dims
        for n in client_counts
        for eps in epsilons
    ]
    reports = []
    for point, (b, d, n, eps) in enumerate(grid):
        delta = default_dp_delta(n) if dp_delta is None else dp_delta
        summary = {
            "bit_width": b,
            "dim": d,
            "num_clients": n,
            "target_epsilon": eps,
            "clip_norm": clip_norm,
            "bound_multiplier": bound_multiplier,
            "rounding_bias": rounding_bias,
            "seed": seed,
        }
        try:
            config, achieved = plan_dme_config(
                dim=d,
                num_clients=n,
                clip_norm=clip_norm,
                bit_width=b,
                target_epsilon=eps,
                dp_delta=delta,
                sign_seed=_point_seed(seed, point, 0),
                bound_multiplier=bound_multiplier,
                rounding_bias=rounding_bias,
                scaled_field_bound=scaled_field_bound,
            )
        except (ValueError, MemoryError) as exc:
            reports.append(
                DmeReport(summary, math.nan, delta, b, math.nan, math.nan, trials,
                          math.nan, math.nan, failure=str(exc))
            )
            continue
        sigma = calibrate_gaussian_sigma(eps, delta, clip_norm)
        summary.update(
            central_variance=config.central_variance,
            scale=config.scale,
            padded_dim=config.padded_dim,
            baseline_sigma=sigma,
        )
        skellam_mses, baseline_mses = [], []
        for t in range(trials):
            trial_seed = _point_seed(seed, point, t)
            data = generate_sphere_data(n, d, clip_norm, trial_seed)
            skellam_mses.append(run_dme_trial(config, data, trial_seed))
            rng = derive_rng(trial_seed, STREAM_BASELINE, t)
            baseline_mses.append(_gaussian_trial(data, sigma, rng, clip_norm))
        reports.append(
            DmeReport(
                config=summary,
                epsilon=achieved,
                delta=delta,
                bit_width=b,
                mse=float(np.mean(skellam_mses)),
                baseline_mse=float(np.mean(baseline_mses)),
                trials=trials,
                mse_ci95=_ci95(skellam_mses),
                baseline_mse_ci95=_ci95(baseline_mses),
            )
        )
    return reports


_CSV_COLUMNS = [
    "method", "bit_width", "dim", "num_clients", "target_epsilon",
    "epsilon", "delta", "mse", "mse_ci95", "trials", "failure",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.12g}"
    return "" if value is None else str(value)


def write_reports_csv(reports: list[DmeReport], path: str) -> None:
    """One row per (grid point, method); byte-stable for a fixed seed."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in reports:
            base = [r.bit_width, r.config.get("dim"), r.config.get("num_clients"),
                    r.config.get("target_epsilon")]
            writer.writerow(
                ["skellam"] + [_fmt(v) for v in base]
                + [_fmt(r.epsilon), _fmt(r.delta), _fmt(r.mse), _fmt(r.mse_ci95),
                   str(r.trials), _fmt(r.failure)]
            )
            writer.writerow(
                ["gaussian"] + [_fmt(v) for v in base]
                + [_fmt(r.config.get("target_epsilon", math.nan)), _fmt(r.delta),
                   _fmt(r.baseline_mse), _fmt(r.baseline_mse_ci95), str(r.trials),
                   _fmt(r.failure)]
            )


def write_reports_json(reports: list[DmeReport], path: str) -> None:
    """Full per-point configs and seeds, for exact replay."""
    payload = [asdict(r) for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Multi-dimensional Skellam mechanism toolkit.

Exact discrete noise sampling, sharp Renyi-DP and privacy-loss
accounting, the clip/rotate/round/noise/modular-sum aggregation pipeline,
and a distributed mean-estimation experiment harness.
"""

from .bessel import (
    consecutive_log_ratios,
    log_bessel_i,
    log_bessel_i_many,
    log_bessel_ratio,
    ratio_sinh_bound,
)
from .harness import (
    DmeReport,
    generate_sphere_data,
    plan_dme_config,
    run_dme_sweep,
    run_dme_trial,
    run_gaussian_baseline,
    write_reports_csv,
    write_reports_json,
)
from .pld import (
    PrivacyLossDistribution,
    analytic_gaussian_delta,
    calibrate_gaussian_sigma,
    pld_compose,
    pld_delta,
    pld_epsilon,
    skellam_pld,
)
from .quantize import (
    QuantizerConfig,
    RoundedVector,
    clip_l2,
    conditional_round,
    inverse_randomized_hadamard,
    randomized_hadamard,
    rounded_norm_bound,
    stochastic_round,
)
from .rdp import (
    DEFAULT_ORDERS,
    DpBound,
    MechanismSpec,
    RdpCurve,
    calibrate_mu,
    compose,
    compose_repeated,
    gaussian_rdp,
    gaussian_rdp_curve,
    l1_from_l2,
    rdp_to_dp,
    skellam_rdp_curve,
    skellam_rdp_multidim,
    skellam_rdp_scalar,
    skellam_rdp_scaled,
)
from .secagg import (
    AggregationConfig,
    FieldVector,
    client_encode,
    secure_sum,
    server_decode,
    signed_decode,
    solve_scale,
)
from .skellam import (
    SkellamParams,
    log_bessel_ratio_product,
    ratio_product_ceiling,
    sample_poisson,
    sample_skellam,
    skellam_log_pmf,
    skellam_renyi_divergence,
)
from .streams import derive_rng

__version__ = "0.1.0"

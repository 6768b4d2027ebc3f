"""Numerically stable modified Bessel functions of the first kind.

Everything downstream (pmf values, privacy-loss values, divergence sums)
needs log I_nu(x) and log-ratios of consecutive orders at accuracies far
beyond what naive evaluation provides:

* ``log_bessel_i`` evaluates log I_|nu|(x) through the exponentially scaled
  ``scipy.special.ive`` and falls back to a log-space ascending series when
  the scaled value underflows (far sub-exponential tails).
* ``log_bessel_ratio`` evaluates log(I_{nu-1}(x)/I_nu(x)) by backward
  recurrence on the ratio itself. Subtracting two large logs loses exactly
  the digits the privacy-loss grid needs; the recurrence keeps absolute
  error near machine epsilon.
* ``ratio_sinh_bound`` gives the sharp sinh-scale envelope of that ratio
  used both as a recurrence seed and as a verification bracket.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

# ive underflows (returns 0.0) once log I - x < log(DBL_MIN); values close to
# the subnormal range lose relative precision, so fall back a bit earlier.
_IVE_FLOOR = 1e-280

_SERIES_CHUNK = 20_000_000


def _log_ive_series(orders: np.ndarray, x: float) -> np.ndarray:
    """Ascending series for log I_a(x), summed in log space.

    Valid for any a >= 0, x > 0; only economical where the series peak is
    early, which is exactly the regime where ``ive`` underflows.
    """
    a = orders.astype(np.float64)
    log_half_x = math.log(0.5 * x)
    peak = 0.5 * (np.sqrt(a * a + x * x) - a)
    m_hi = int(np.ceil(peak.max())) + 80
    # terms decay at least geometrically (ratio < 1/2) beyond m_hi
    while (0.25 * x * x) / ((m_hi + 1.0) * (m_hi + a.min() + 1.0)) >= 0.5:
        m_hi *= 2
    m = np.arange(m_hi + 1.0)
    log_m_fact = special.gammaln(m + 1.0)
    out = np.empty(a.shape)
    chunk = max(1, _SERIES_CHUNK // (m_hi + 1))
    for i in range(0, len(a), chunk):
        a_col = a[i : i + chunk, None]
        log_terms = (2.0 * m + a_col) * log_half_x - log_m_fact
        log_terms -= special.gammaln(m + a_col + 1.0)
        out[i : i + chunk] = special.logsumexp(log_terms, axis=1)
    return out


def log_bessel_i_many(orders, x: float) -> np.ndarray:
    """log I_|order|(x) for an integer array of orders and one argument x."""
    a = np.abs(np.asarray(orders, dtype=np.int64))
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x}")
    if x < 0.0:
        raise ValueError(f"argument must be non-negative, got {x}")
    if x == 0.0:
        return np.where(a == 0, 0.0, -np.inf).astype(np.float64)
    scaled = special.ive(a.astype(np.float64), x)
    out = np.full(a.shape, -np.inf)
    ok = scaled > _IVE_FLOOR
    out[ok] = np.log(scaled[ok]) + x
    if not ok.all():
        out[~ok] = _log_ive_series(a[~ok], x)
    return out


def log_bessel_i(order: int, x: float) -> float:
    """log I_|order|(x) for a single integer order.

    Returns -inf only at x == 0 with order != 0 (the point mass edge); the
    value is finite for every x > 0.
    """
    return float(log_bessel_i_many(np.array([order]), float(x))[0])


def ratio_sinh_bound(order: float, x: float, kind: int) -> float:
    """Envelope d such that asinh(d) brackets log(I_{order-1}(x)/I_order(x)).

    kind=0 gives the lower envelope, kind=2 the upper one:

        d(order, x) = (order - 1/2)/x + t / (2 x sqrt(t^2 + x^2)),
        t = order + (kind - 1)/2.
    """
    if kind not in (0, 2):
        raise ValueError(f"kind must be 0 (lower) or 2 (upper), got {kind}")
    nu = float(order)
    if nu < 0.5:
        raise ValueError(f"order must be >= 1/2, got {order}")
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"argument must be positive and finite, got {x}")
    t = nu + (kind - 1) / 2.0
    return (nu - 0.5) / x + t / (2.0 * x * math.sqrt(t * t + x * x))


def _recurrence_top(order: int, x: float) -> int:
    # relative error injected at the top decays like exp(-(top^2 - order^2)/x);
    # 45x in the radicand leaves the seed contribution below 1e-19
    return int(math.ceil(math.sqrt(order * order + 45.0 * x))) + 10


def consecutive_log_ratios(order_max: int, x: float) -> np.ndarray:
    """log(I_{k-1}(x)/I_k(x)) for k = 1..order_max in one backward pass.

    The ratio r_k = I_k/I_{k-1} obeys r_k = 1/(2k/x + r_{k+1}); recursing
    down from a seed far above order_max contracts any seed error to below
    machine precision. The seed itself comes from the upper sinh envelope.
    """
    if order_max < 1:
        raise ValueError(f"order_max must be >= 1, got {order_max}")
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"argument must be positive and finite, got {x}")
    top = _recurrence_top(order_max, x)
    d2 = ratio_sinh_bound(top + 1, x, kind=2)
    r = 1.0 / (d2 + math.sqrt(1.0 + d2 * d2))  # exp(-asinh(d2))
    ratios = np.empty(order_max + 1)
    for k in range(top, 0, -1):
        r = 1.0 / (2.0 * k / x + r)
        if k <= order_max:
            ratios[k] = r
    return -np.log(ratios[1:])


def log_bessel_ratio(order: int, x: float) -> float:
    """log(I_{order-1}(x)/I_order(x)) for an integer order >= 1, x > 0.

    Always non-negative and non-decreasing in the order. Negative orders
    must be folded to |order| by the caller first (I is even in the order).
    """
    order = int(order)
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"argument must be positive and finite, got {x}")
    top = _recurrence_top(order, x)
    d2 = ratio_sinh_bound(top + 1, x, kind=2)
    r = 1.0 / (d2 + math.sqrt(1.0 + d2 * d2))
    for k in range(top, order - 1, -1):
        r = 1.0 / (2.0 * k / x + r)
    return -math.log(r)

"""SIR, transmission outage and covert rate.

The MMRS expressions are alternating binomial sums whose terms grow like
``C(n, n/2)``. Compensated summation removes the rounding of the additions
but not the ~1e-16 relative error of each term, so the absolute error in
double precision is about ``1e-16 * C(n, n/2)``. Up to ``n = 12`` (terms
below ~1e3) the sums run in double precision with ``math.fsum``; above that
every term is evaluated in ``mpmath`` at a working precision scaled to
``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import InvalidParameterError
from .model import SystemParams, default_jammer_count

MAX_MMRS_RELAYS = 60
_DOUBLE_PRECISION_LIMIT = 12


@dataclass(frozen=True)
class RateResult:
    p_out: float
    expected_min_rate: float
    covert_rate: float
    scheme: str


def sir_hop(signal_gain, p_t: float, p_j: float, jam_gains, sigma2: float):
    """``p_t * signal_gain / (p_j * sum(jam_gains) + sigma2)``."""
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")
    interference = float(np.sum(jam_gains)) if np.ndim(jam_gains) else float(jam_gains)
    return p_t * signal_gain / (p_j * interference + sigma2)


def truncated_exp_mgf(s, alpha: float):
    """``E[exp(-s X)]`` for X ~ Exp(1) truncated to ``[0, alpha]``."""
    s = np.asarray(s, dtype=float)
    return np.expm1(-alpha * (1 + s)) / ((1 + s) * np.expm1(-alpha))


def outage_rrs(params: SystemParams, n_jammers: int | None = None) -> float:
    """Two-hop transmission outage probability under RRS.

    Every one of ``n_jammers`` idle relays (default ``n - 1``) jams each
    hop with a gain truncated below ``alpha``::

        1 - exp(-theta (sigma_c2 + sigma_b2) / p_t) * B(K)**(2 n_jammers),
        K = theta p_j / p_t
    """
    m = params.n - 1 if n_jammers is None else n_jammers
    if m < 0:
        raise InvalidParameterError(f"n_jammers must be >= 0, got {m}")
    k = params.theta * params.p_j / params.p_t
    log_ok = -params.theta * (params.sigma_c2 + params.sigma_b2) / params.p_t
    if m:
        log_ok += 2 * m * math.log(float(truncated_exp_mgf(k, params.alpha)))
    return float(min(max(-math.expm1(log_ok), 0.0), 1.0))


def _binomial_terms(n: int):
    """(k, (-1)**k C(n, k), 2k - 1) for k = 0..n as exact integers."""
    for k in range(n + 1):
        yield k, (-1) ** k * math.comb(n, k), 2 * k - 1


def _check_n(n: int):
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if n > MAX_MMRS_RELAYS:
        raise InvalidParameterError(f"alternating sums are limited to n <= {MAX_MMRS_RELAYS}, got {n}")


def mmrs_first_gain_cdf(x, n: int, *, extended: bool | None = None):
    """CDF of the first-hop gain of the relay chosen by max-min selection.

    ``sum_{k=0}^{n} C(n,k) (-1)**k (k e^{-x} + (k-1) e^{-2kx}) / (2k-1)``
    """
    _check_n(n)
    if np.ndim(x):
        return np.array([mmrs_first_gain_cdf(v, n, extended=extended) for v in np.ravel(x)]).reshape(np.shape(x))
    x = float(x)
    if x < 0:
        raise InvalidParameterError(f"x must be >= 0, got {x}")
    if extended is None:
        extended = n > _DOUBLE_PRECISION_LIMIT
    if extended:
        with mpmath.workdps(30 + n):
            ex = mpmath.exp(-mpmath.mpf(x))
            total = mpmath.fsum(c * (k * ex + (k - 1) * mpmath.exp(-2 * k * mpmath.mpf(x))) / q
                                for k, c, q in _binomial_terms(n))
            return float(total)
    ex = math.exp(-x)
    return math.fsum(c * (k * ex + (k - 1) * math.exp(-2 * k * x)) / q for k, c, q in _binomial_terms(n))


def outage_mmrs_raw(params: SystemParams, l: int | None = None, *, extended: bool | None = None) -> float:
    """Unclamped first-hop outage under MMRS with ``l`` truncated-gain jammers.

    The expectation of :func:`mmrs_first_gain_cdf` at
    ``theta (p_j * sum(g_jc) + sigma_c2) / p_t``::

        sum_k C(n,k) (-1)**k / (2k-1) * [k e^{-u} B(z)**l + (k-1) e^{-2ku} B(2kz)**l]

    with ``u = theta sigma_c2 / p_t``, ``z = theta p_j / p_t`` and ``B`` the
    truncated-exponential Laplace transform. ``l`` defaults to
    :func:`default_jammer_count`.
    """
    n = params.n
    _check_n(n)
    if l is None:
        l = default_jammer_count(n, params.alpha)
    if l < 0:
        raise InvalidParameterError(f"l must be >= 0, got {l}")
    u = params.theta * params.sigma_c2 / params.p_t
    z = params.theta * params.p_j / params.p_t
    alpha = params.alpha
    if extended is None:
        extended = n > _DOUBLE_PRECISION_LIMIT
    if extended:
        with mpmath.workdps(30 + n):
            a = mpmath.mpf(alpha)

            def bm(s):
                s = mpmath.mpf(s)
                return mpmath.expm1(-a * (1 + s)) / ((1 + s) * mpmath.expm1(-a))

            first = mpmath.exp(-mpmath.mpf(u)) * bm(z) ** l
            total = mpmath.fsum(
                c * (k * first + (k - 1) * mpmath.exp(-2 * k * mpmath.mpf(u)) * bm(2 * k * z) ** l) / q
                for k, c, q in _binomial_terms(n)
            )
            return float(total)
    first = math.exp(-u) * float(truncated_exp_mgf(z, alpha)) ** l
    return math.fsum(
        c * (k * first + (k - 1) * math.exp(-2 * k * u) * float(truncated_exp_mgf(2 * k * z, alpha)) ** l) / q
        for k, c, q in _binomial_terms(n)
    )


def outage_mmrs(params: SystemParams, l: int | None = None) -> float:
    """:func:`outage_mmrs_raw` clamped to ``[0, 1]``."""
    return float(min(max(outage_mmrs_raw(params, l), 0.0), 1.0))


def covert_rate(p_out: float, expected_min_rate: float) -> float:
    """``(1 - p_out) * expected_min_rate`` in bits/s/Hz."""
    if not 0 <= p_out <= 1:
        raise InvalidParameterError(f"p_out must lie in [0, 1], got {p_out}")
    if expected_min_rate < 0:
        raise InvalidParameterError(f"expected_min_rate must be >= 0, got {expected_min_rate}")
    return (1.0 - p_out) * expected_min_rate


def rate_result(scheme: str, p_out: float, expected_min_rate: float) -> RateResult:
    return RateResult(p_out, expected_min_rate, covert_rate(p_out, expected_min_rate), scheme)

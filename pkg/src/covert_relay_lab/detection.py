"""Detection performance of the warden's radiometer test.

Willie compares the received power ``Y`` with a threshold ``lam``. Under
H0, ``Y = p_j * S + sigma_w2``, where ``S`` is the sum of ``l`` unit
exponential jammer gains (Erlang(l)). Under H1 a covert signal of power
``p_sig`` is added through another unit exponential gain. For RRS,
``p_sig = p_t``. For MMRS with channel-inversion power,
``p_sig = p_j / phi``.

Two models of the detection error ``zeta = P_FA + P_MD`` are provided:

``paper``
    The published closed form. Its missed-detection term omits the
    positivity indicator of the conditional exponential CDF, so it can
    fall below zero. The sum is clamped to ``[0, 1]`` and the clamp is
    reported.
``exact``
    The same expectation with the indicator kept::

        zeta = 1 - E,   E = exp(-a / p_sig) * E[exp(c S); S < a / p_j]

    where ``a = lam - sigma_w2`` and ``c = p_j / p_sig``. It is valid for
    any ``p_sig > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _opt
from scipy import special

from .errors import ClosedFormInvalidError, InvalidParameterError, NoInteriorMinimumError
from .model import SystemParams

MODELS = ("paper", "exact")
_SCAN_POINTS = 256
_MAX_DOUBLINGS = 60


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


# --------------------------------------------------------------------------
# Erlang helpers


def erlang_tail(l: int, a):
    """Regularized upper incomplete gamma ``Q(l, a) = P(Erlang(l) >= a)``.

    Computed from the finite series ``exp(-a) * sum_{j<l} a**j / j!``.
    """
    if l < 1:
        raise InvalidParameterError(f"erlang_tail needs l >= 1, got {l}")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise InvalidParameterError("erlang_tail needs a >= 0")
    term = np.exp(-a)
    total = term.copy()
    for j in range(1, l):
        term = term * a / j
        total = total + term
    return _out(np.clip(total, 0.0, 1.0))


def erlang_pdf(l: int, x):
    """Density of Erlang(l, rate 1) at ``x >= 0``; zero for ``l == 0``."""
    x = np.asarray(x, dtype=float)
    if l == 0:
        return _out(np.zeros_like(x))
    with np.errstate(divide="ignore"):
        logf = (l - 1) * np.log(x) - x - math.lgamma(l)
    f = np.exp(logf)
    if l == 1:
        f = np.exp(-x)
    return _out(np.where(x < 0, 0.0, f))


# --------------------------------------------------------------------------
# paper closed forms


def pfa(l: int, lam, sigma_w2: float, p_j: float):
    """False-alarm probability ``P(p_j S + sigma_w2 >= lam)``.

    Identical for both relay-selection schemes. With ``l == 0`` the H0
    statistic is the constant ``sigma_w2``.
    """
    if not p_j > 0:
        raise InvalidParameterError(f"p_j must be > 0, got {p_j}")
    if l < 0:
        raise InvalidParameterError(f"l must be >= 0, got {l}")
    lam = np.asarray(lam, dtype=float)
    a = lam - sigma_w2
    if l == 0:
        return _out(np.where(a <= 0, 1.0, 0.0))
    return _out(np.where(a <= 0, 1.0, erlang_tail(l, np.maximum(a, 0.0) / p_j)))


def _pmd_paper(l, lam, sigma_w2, p_sig, p_j):
    lam = np.asarray(lam, dtype=float)
    a = lam - sigma_w2
    log_k = -l * np.log1p(-p_j / np.asarray(p_sig, dtype=float))
    raw = 1.0 - np.exp(log_k - np.maximum(a, 0.0) / p_sig)
    return np.where(a > 0, raw, 0.0)


def pmd_rrs_paper(l: int, lam, sigma_w2: float, p_t: float, p_j: float):
    """Unclamped missed-detection term of the RRS closed form.

    ``1 - (p_t / (p_t - p_j))**l * exp((sigma_w2 - lam) / p_t)`` for
    ``lam > sigma_w2``, else 0. Can be negative.
    """
    if not p_t > p_j:
        raise ClosedFormInvalidError(f"RRS closed form needs p_t > p_j (got p_t={p_t}, p_j={p_j})")
    return _out(_pmd_paper(l, lam, sigma_w2, p_t, p_j))


def pmd_mmrs_paper(l: int, lam, sigma_w2: float, phi: float, p_j: float):
    """Unclamped MMRS missed-detection term ``1 - (1/(1-phi))**l exp(phi (sigma_w2 - lam) / p_j)``."""
    if not 0 < phi < 1:
        raise ClosedFormInvalidError(f"MMRS closed form needs 0 < phi < 1, got {phi}")
    return _out(_pmd_paper(l, lam, sigma_w2, p_j / phi, p_j))


def zeta_paper_raw(l: int, lam, sigma_w2: float, p_sig: float, p_j: float):
    """Unclamped paper-form ``P_FA + P_MD``; exactly 1 for ``lam <= sigma_w2``."""
    if not np.all(np.asarray(p_sig) > p_j):
        raise ClosedFormInvalidError(f"closed form needs signal power > p_j (got {p_sig} <= {p_j})")
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(pfa(l, lam, sigma_w2, p_j)) + _pmd_paper(l, lam, sigma_w2, p_sig, p_j)
    return _out(np.where(lam <= sigma_w2, 1.0, z))


def dep_rrs_raw(l: int, lam, params: SystemParams):
    return zeta_paper_raw(l, lam, params.sigma_w2, params.p_t, params.p_j)


def dep_rrs(l: int, lam, params: SystemParams):
    """RRS detection error probability, paper closed form clamped to ``[0, 1]``."""
    if not params.rrs_closed_form_valid:
        raise ClosedFormInvalidError(f"RRS closed form needs p_t > p_j (got {params.p_t} <= {params.p_j})")
    return _out(np.clip(dep_rrs_raw(l, lam, params), 0.0, 1.0))


@dataclass(frozen=True)
class MmrsDetectionContext:
    """Realization-dependent MMRS detection state.

    ``phi = p_j g_ac / (theta (p_j * sum(g_jc) + sigma_c2))`` is the ratio
    of jammer power to Alice's channel-inversion power. It is only valid
    for the closed form when ``phi < 1``.
    """

    phi: float
    l: int

    def __post_init__(self):
        if not self.phi > 0:
            raise InvalidParameterError(f"phi must be > 0, got {self.phi}")
        if self.l < 0:
            raise InvalidParameterError(f"l must be >= 0, got {self.l}")

    @property
    def valid(self) -> bool:
        return self.phi < 1

    @classmethod
    def from_gains(cls, params: SystemParams, g_ac: float, jam_gains_to_c) -> "MmrsDetectionContext":
        jam = np.asarray(jam_gains_to_c, dtype=float)
        phi = params.p_j * g_ac / (params.theta * (params.p_j * jam.sum() + params.sigma_c2))
        return cls(float(phi), int(jam.size))

    @classmethod
    def fixed_power(cls, params: SystemParams, l: int) -> "MmrsDetectionContext":
        """Context for MMRS with fixed transmit power, where ``p_sig = p_t``."""
        return cls(params.p_j / params.p_t, l)


def dep_mmrs_raw(ctx: MmrsDetectionContext, lam, sigma_w2: float, p_j: float):
    if not ctx.valid:
        raise ClosedFormInvalidError(f"MMRS closed form needs phi < 1, got {ctx.phi}")
    return zeta_paper_raw(ctx.l, lam, sigma_w2, p_j / ctx.phi, p_j)


def dep_mmrs(ctx: MmrsDetectionContext, lam, sigma_w2: float, p_j: float):
    """MMRS detection error probability, paper closed form clamped to ``[0, 1]``."""
    return _out(np.clip(dep_mmrs_raw(ctx, lam, sigma_w2, p_j), 0.0, 1.0))


def dzeta_dlambda_paper(l: int, lam, sigma_w2: float, p_sig: float, p_j: float):
    """Derivative of :func:`zeta_paper_raw` in ``lam`` for ``lam > sigma_w2``.

    ``-f_l((lam - sigma_w2) / p_j) / p_j + (K / p_sig) exp(-(lam - sigma_w2) / p_sig)``
    with ``f_l`` the Erlang(l) density and ``K = (p_sig / (p_sig - p_j))**l``.
    """
    lam = np.asarray(lam, dtype=float)
    a = np.maximum(lam - sigma_w2, 0.0)
    log_k = -l * math.log1p(-p_j / p_sig)
    d = -np.asarray(erlang_pdf(l, a / p_j)) / p_j + np.exp(log_k - a / p_sig) / p_sig
    return _out(np.where(lam > sigma_w2, d, 0.0))


# --------------------------------------------------------------------------
# exact model


def _exact_e(l, a, p_sig, p_j):
    """``exp(-a/p_sig) * E[exp(c S); S < a/p_j]`` for ``a >= 0`` (broadcasts over ``a`` and ``p_sig``)."""
    a = np.asarray(a, dtype=float)
    p_sig = np.asarray(p_sig, dtype=float)
    if l == 0:
        return np.exp(-a / p_sig)
    b = a / p_j
    d = 1.0 - p_j / p_sig
    x = d * b
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # exp(-b) b^l / l! * 1F1(1; l+1; d b) is stable unless d b is large and positive,
        # where the regularized lower gamma form takes over (d > 0 there)
        kummer = np.exp(l * np.log(b) - b - math.lgamma(l + 1)) * special.hyp1f1(1.0, l + 1.0, np.minimum(x, 50.0))
        tail = np.exp(-a / p_sig - l * np.log(np.where(d > 0, d, 1.0))) * special.gammainc(l, np.maximum(x, 0.0))
        out = np.where(x > 50.0, tail, kummer)
    return np.where(b > 0, out, 0.0)


def zeta_exact(l: int, lam, sigma_w2: float, p_sig: float, p_j: float):
    """Detection error ``P(Y0 >= lam) + P(Y1 < lam)`` with ``l`` jammers, in closed form."""
    if not (np.all(np.asarray(p_sig) > 0) and p_j > 0):
        raise InvalidParameterError("signal and jammer powers must be > 0")
    lam = np.asarray(lam, dtype=float)
    a = lam - sigma_w2
    z = 1.0 - _exact_e(l, np.maximum(a, 0.0), p_sig, p_j)
    return _out(np.where(a <= 0, 1.0, np.clip(z, 0.0, 1.0)))


def pmd_exact_analytic(l: int, lam, sigma_w2: float, p_sig: float, p_j: float):
    """``P(p_sig X + p_j S + sigma_w2 < lam)`` in closed form."""
    lam = np.asarray(lam, dtype=float)
    a = np.maximum(lam - sigma_w2, 0.0)
    below = 1.0 if l == 0 else 1.0 - np.asarray(erlang_tail(l, a / p_j))
    p = below - _exact_e(l, a, p_sig, p_j)
    return _out(np.where(lam > sigma_w2, np.clip(p, 0.0, 1.0), 0.0))


def dzeta_dlambda_exact(l: int, lam, sigma_w2: float, p_sig: float, p_j: float):
    """Derivative of :func:`zeta_exact`: ``E / p_sig - f_l((lam - sigma_w2) / p_j) / p_j``."""
    lam = np.asarray(lam, dtype=float)
    a = np.maximum(lam - sigma_w2, 0.0)
    d = _exact_e(l, a, p_sig, p_j) / p_sig - np.asarray(erlang_pdf(l, a / p_j)) / p_j
    return _out(np.where(lam > sigma_w2, d, 0.0))


def pmd_exact(l: int, lam: float, sigma_w2: float, p_t: float, p_j: float, trials: int, seed: int):
    """Monte Carlo estimate of the missed-detection probability with ``l`` jammers."""
    from .montecarlo import simulate_detection_fixed

    return simulate_detection_fixed(l, lam, sigma_w2, p_t, p_j, trials, seed)["pmd"]


# --------------------------------------------------------------------------
# optimal threshold


@dataclass(frozen=True)
class DetectionAnalysis:
    lambda_star: float
    zeta_star: float
    pfa_at_star: float
    pmd_at_star: float
    clamped: bool
    interior: bool
    derivative_at_star: float
    model: str
    l: int


def _zeta_callable(model, l, sigma_w2, p_sig, p_j):
    if model == "paper":
        return lambda lam: np.clip(zeta_paper_raw(l, lam, sigma_w2, p_sig, p_j), 0.0, 1.0)
    if model == "exact":
        return lambda lam: np.asarray(zeta_exact(l, lam, sigma_w2, p_sig, p_j))
    raise InvalidParameterError(f"model must be one of {MODELS}, got {model!r}")


def _minimize_batch(sigma_w2, p_sig, zeta_of):
    """Vectorized threshold search, one row per signal power.

    ``zeta_of(lam)`` maps a ``(k, m)`` array of thresholds (row ``i`` for
    ``p_sig[i]``) to detection errors. Returns
    ``(lambda_star, zeta_star, lo, hi, step)`` arrays.
    """
    p_sig = np.atleast_1d(np.asarray(p_sig, dtype=float))
    lo = np.full(p_sig.shape, float(sigma_w2))
    hi = lo + p_sig
    for _ in range(_MAX_DOUBLINGS + 1):
        grow = zeta_of(hi[:, None])[:, 0] <= zeta_of(((lo + hi) / 2)[:, None])[:, 0]
        if not grow.any():
            break
        hi = np.where(grow, lo + 2 * (hi - lo), hi)
    else:
        raise NoInteriorMinimumError(
            f"detection error still decreasing after {_MAX_DOUBLINGS} bracket doublings"
        )

    ks = np.arange(1, _SCAN_POINTS + 1) / _SCAN_POINTS
    step = (hi - lo) / _SCAN_POINTS
    grid = lo[:, None] + (hi - lo)[:, None] * ks
    zg = zeta_of(grid)
    k = np.argmin(zg, axis=1)
    rows = np.arange(p_sig.size)
    best_lam = grid[rows, k]
    best_z = zg[rows, k]
    a = np.maximum(best_lam - step, lo)
    b = np.minimum(best_lam + step, hi)

    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    zc = zeta_of(c[:, None])[:, 0]
    zd = zeta_of(d[:, None])[:, 0]
    for _ in range(80):
        left = zc < zd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - inv_phi * (b - a)
        new_d = a + inv_phi * (b - a)
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        zc, zd = np.where(left, zeta_of(new_c[:, None])[:, 0], zd), np.where(left, zc, zeta_of(new_d[:, None])[:, 0])
    mid = (a + b) / 2
    zmid = zeta_of(mid[:, None])[:, 0]
    take = zmid <= best_z
    lam_star = np.where(take, mid, best_lam)
    zeta_star = np.where(take, zmid, best_z)
    return lam_star, zeta_star, lo, hi, step


def signal_power(scheme: str, params: SystemParams, ctx: MmrsDetectionContext | None = None) -> float:
    if scheme == "rrs":
        return params.p_t
    if scheme == "mmrs":
        if ctx is None:
            return params.p_t
        return params.p_j / ctx.phi
    raise InvalidParameterError(f"scheme must be 'rrs' or 'mmrs', got {scheme!r}")


def optimal_threshold(
    scheme: str,
    l: int,
    params: SystemParams,
    ctx: MmrsDetectionContext | None = None,
    model: str = "paper",
) -> DetectionAnalysis:
    """Threshold minimizing the detection error, and the minimum itself.

    The search brackets ``(sigma_w2, hi]`` by doubling ``hi`` from
    ``sigma_w2 + p_sig`` until ``zeta(hi) > zeta(midpoint)``, scans the
    bracket on a uniform grid, refines around the best grid point by
    golden-section search and, when the derivative changes sign there,
    polishes the stationary point with Brent's method.
    """
    if scheme == "mmrs" and ctx is not None:
        l = ctx.l
    p_sig = signal_power(scheme, params, ctx)
    sw, pj = params.sigma_w2, params.p_j
    if model == "paper" and not p_sig > pj:
        what = "p_t > p_j" if scheme == "rrs" or ctx is None else "phi < 1"
        raise ClosedFormInvalidError(f"paper closed form for {scheme} needs {what}")
    zeta = _zeta_callable(model, l, sw, p_sig, pj)
    deriv = dzeta_dlambda_paper if model == "paper" else dzeta_dlambda_exact

    lam_star, z_star, lo, hi, step = _minimize_batch(sw, p_sig, zeta)
    lam_star, z_star, lo, hi, step = float(lam_star[0]), float(z_star[0]), float(lo[0]), float(hi[0]), float(step[0])

    a, b = max(lam_star - step, lo * (1 + 1e-15) + 1e-300), min(lam_star + step, hi)
    da, db = deriv(l, a, sw, p_sig, pj), deriv(l, b, sw, p_sig, pj)
    if da < 0 < db:
        root = _opt.brentq(lambda x: deriv(l, x, sw, p_sig, pj), a, b, xtol=1e-14, rtol=1e-15)
        z_root = float(zeta(root))
        if z_root <= z_star + 1e-12:
            lam_star, z_star = root, z_root

    if model == "paper":
        pf = float(pfa(l, lam_star, sw, pj))
        pm = float(_pmd_paper(l, lam_star, sw, p_sig, pj))
        raw = pf + pm
        clamped = bool(pm < 0 or raw < 0 or raw > 1)
    else:
        pf = float(pfa(l, lam_star, sw, pj))
        pm = float(pmd_exact_analytic(l, lam_star, sw, p_sig, pj))
        clamped = False
    d_star = float(deriv(l, lam_star, sw, p_sig, pj))
    interior = (not clamped) and (lam_star - lo) > 1e-6 * (hi - lo) and abs(d_star) <= 1e-6
    return DetectionAnalysis(lam_star, z_star, pf, pm, clamped, bool(interior), d_star, model, int(l))


def zeta_star_batch(l: int, sigma_w2: float, p_sig, p_j: float, model: str = "exact"):
    """``(lambda_star, zeta_star)`` arrays for each signal power in ``p_sig``.

    Same search as :func:`optimal_threshold` without the derivative polish.
    """
    p_sig = np.atleast_1d(np.asarray(p_sig, dtype=float))
    if model == "paper" and np.any(p_sig <= p_j):
        raise ClosedFormInvalidError("paper closed form needs every signal power > p_j")
    col = p_sig[:, None]
    if model == "paper":
        def zeta_of(lam):
            return np.clip(zeta_paper_raw(l, lam, sigma_w2, col, p_j), 0.0, 1.0)
    elif model == "exact":
        def zeta_of(lam):
            return np.asarray(zeta_exact(l, lam, sigma_w2, col, p_j))
    else:
        raise InvalidParameterError(f"model must be one of {MODELS}, got {model!r}")
    lam_star, z_star, *_ = _minimize_batch(sigma_w2, p_sig, zeta_of)
    return lam_star, z_star


@dataclass(frozen=True)
class FadingZetaStar:
    mean: float
    worst: float
    n_contexts: int
    n_invalid: int
    model: str


def fading_zeta_star(phis, l: int, params: SystemParams, model: str = "exact") -> FadingZetaStar:
    """Average and worst-case ``zeta*`` over sampled MMRS ``phi`` contexts.

    Under the paper model, contexts with ``phi >= 1`` are outside the
    closed form; they are excluded and counted in ``n_invalid``.
    """
    phis = np.asarray(phis, dtype=float)
    valid = phis < 1 if model == "paper" else np.ones(phis.shape, dtype=bool)
    if not valid.any():
        return FadingZetaStar(math.nan, math.nan, int(phis.size), int(phis.size), model)
    _, zs = zeta_star_batch(l, params.sigma_w2, params.p_j / phis[valid], params.p_j, model)
    return FadingZetaStar(float(zs.mean()), float(zs.min()), int(phis.size), int((~valid).sum()), model)

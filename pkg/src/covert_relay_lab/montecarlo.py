"""Monte Carlo estimators for outage, detection error, rates and the MMRS gain CDF.

Two jammer models are supported:

``formula_consistent``
    Mirrors the closed-form derivations. Under RRS all ``n - 1`` idle relays
    jam and their gains to Carol/Bob are Exponential(1) truncated to
    ``[0, alpha]``; under MMRS a fixed number ``l`` of jammers does the same.
    Willie hears ``l`` jammers with untruncated Exponential(1) gains, and the
    MMRS outage event is first-hop only, matching the closed form.
``scheme``
    The literal threshold rule: relay ``i != selected`` jams a hop iff its
    gain to that hop's receiver is below ``alpha``; outage is two-hop.

Trials are cut into fixed-size chunks; chunk ``k`` of an estimator with
stream tag ``t`` always draws from ``substream(seed, t, k)``. Chunk sums are
reduced in chunk order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .model import (
    SystemParams,
    default_jammer_count,
    jammer_mask,
    sample_realization,
    sample_truncated_exp,
    select_mmrs,
    select_rrs,
    substream,
)

MODES = ("formula_consistent", "scheme")
SCHEMES = ("rrs", "mmrs")
POWER_MODES = ("fixed_pt", "channel_inversion")

Z95 = 1.959963984540054

TAG_OUTAGE = 1
TAG_DEP = 2
TAG_RATE = 3
TAG_GAIN_CDF = 4
TAG_DETECTION = 5
TAG_PHI = 6


@dataclass(frozen=True)
class MetricEstimate:
    mean: float
    half_width: float
    trials: int
    seed: int
    mode: str

    @property
    def se(self) -> float:
        return self.half_width / Z95

    def contains(self, value: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_se * self.se


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``n_jammers`` overrides the default fixed jammer count ``l`` used by the
    formula-consistent model (see :func:`formula_jammer_counts`).
    ``jamming=False`` removes every jammer, at the receivers and at Willie.
    """

    trials: int = 100_000
    seed: int = 0
    mode: str = "formula_consistent"
    scheme: str = "rrs"
    power_mode: str = "fixed_pt"
    workers: int = 1
    chunk_size: int = 16_384
    n_jammers: int | None = None
    jamming: bool = True

    def __post_init__(self):
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise InvalidParameterError(f"trials must be an integer >= 1, got {self.trials!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameterError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.power_mode not in POWER_MODES:
            raise InvalidParameterError(f"power_mode must be one of {POWER_MODES}, got {self.power_mode!r}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers!r}")
        if self.chunk_size < 1:
            raise InvalidParameterError(f"chunk_size must be >= 1, got {self.chunk_size!r}")
        if self.n_jammers is not None and self.n_jammers < 0:
            raise InvalidParameterError(f"n_jammers must be >= 0, got {self.n_jammers!r}")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def formula_jammer_counts(params: SystemParams, cfg: SimConfig) -> tuple[int, int]:
    """(jammers per receiving hop, jammers heard by Willie) in the formula-consistent model."""
    if not cfg.jamming:
        return 0, 0
    l = cfg.n_jammers if cfg.n_jammers is not None else default_jammer_count(params.n, params.alpha)
    if cfg.scheme == "rrs":
        return params.n - 1, l
    return l, l


# --------------------------------------------------------------------------
# chunked execution


def chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    full, rest = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def run_chunked(
    kernel: Callable[[np.random.Generator, int], np.ndarray],
    trials: int,
    seed: int,
    tag: int,
    workers: int = 1,
    chunk_size: int = 16_384,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-column sums and sums of squares of ``kernel`` outputs over all trials.

    ``kernel(rng, m)`` returns an array with ``m`` rows (one per trial).
    """
    sizes = chunk_sizes(trials, chunk_size)

    def one(k):
        vals = np.asarray(kernel(substream(seed, tag, k), sizes[k]), dtype=float).reshape(sizes[k], -1)
        return vals.sum(axis=0), np.square(vals).sum(axis=0)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(k) for k in range(len(sizes))]
    s1 = parts[0][0].copy()
    s2 = parts[0][1].copy()
    for a, b in parts[1:]:
        s1 += a
        s2 += b
    return s1, s2


def collect_chunked(kernel, count: int, seed: int, tag: int, chunk_size: int = 16_384) -> np.ndarray:
    """Concatenate raw kernel outputs (used for sampled contexts, not averages)."""
    sizes = chunk_sizes(count, chunk_size)
    return np.concatenate([np.asarray(kernel(substream(seed, tag, k), m)) for k, m in enumerate(sizes)])


def _estimate(s1: float, s2: float, trials: int, seed: int, mode: str) -> MetricEstimate:
    mean = s1 / trials
    if trials > 1:
        var = max(s2 - s1 * s1 / trials, 0.0) / (trials - 1)
        hw = Z95 * math.sqrt(var / trials)
    else:
        hw = math.inf
    return MetricEstimate(float(mean), float(hw), int(trials), int(seed), mode)


def _estimates(s1, s2, trials, seed, mode) -> list[MetricEstimate]:
    return [_estimate(a, b, trials, seed, mode) for a, b in zip(s1, s2)]


# --------------------------------------------------------------------------
# per-trial channel state


class TrialBatch(NamedTuple):
    g_ac: np.ndarray  # selected relay, first hop
    g_cb: np.ndarray  # selected relay, second hop
    int_c: np.ndarray  # sum of hop-1 jammer gains at Carol
    int_b: np.ndarray  # sum of hop-2 jammer gains at Bob
    jam_w: np.ndarray  # sum of hop-1 jammer gains at Willie
    g_aw: np.ndarray
    l1: np.ndarray  # hop-1 jammer count


def sample_trials(params: SystemParams, cfg: SimConfig, rng: np.random.Generator, m: int) -> TrialBatch:
    real = sample_realization(params, rng, m)
    if cfg.scheme == "rrs":
        sel = select_rrs(params.n, rng, m)
    else:
        sel = select_mmrs(real.g_ac, real.g_cb)
    rows = np.arange(m)
    g_ac = real.g_ac[rows, sel]
    g_cb = real.g_cb[rows, sel]
    if not cfg.jamming:
        zero = np.zeros(m)
        return TrialBatch(g_ac, g_cb, zero, zero, zero, real.g_aw, np.zeros(m, dtype=int))
    if cfg.mode == "scheme":
        mask1 = jammer_mask(real.g_jc, params.alpha, sel)
        mask2 = jammer_mask(real.g_jb, params.alpha, sel)
        return TrialBatch(
            g_ac,
            g_cb,
            np.where(mask1, real.g_jc, 0.0).sum(axis=-1),
            np.where(mask2, real.g_jb, 0.0).sum(axis=-1),
            np.where(mask1, real.g_jw, 0.0).sum(axis=-1),
            real.g_aw,
            mask1.sum(axis=-1),
        )
    l_rx, l_w = formula_jammer_counts(params, cfg)
    int_c = sample_truncated_exp(params.alpha, rng, (m, l_rx)).sum(axis=-1)
    int_b = sample_truncated_exp(params.alpha, rng, (m, l_rx)).sum(axis=-1)
    jam_w = rng.standard_exponential((m, l_w)).sum(axis=-1)
    return TrialBatch(g_ac, g_cb, int_c, int_b, jam_w, real.g_aw, np.full(m, l_w))


def hop_sirs(params: SystemParams, t: TrialBatch) -> tuple[np.ndarray, np.ndarray]:
    sir_ac = params.p_t * t.g_ac / (params.p_j * t.int_c + params.sigma_c2)
    sir_cb = params.p_t * t.g_cb / (params.p_j * t.int_b + params.sigma_b2)
    return sir_ac, sir_cb


def _check_power_mode(cfg: SimConfig):
    if cfg.power_mode == "channel_inversion" and cfg.scheme != "mmrs":
        raise InvalidParameterError("power_mode='channel_inversion' only applies to the MMRS scheme")


# --------------------------------------------------------------------------
# estimators


def simulate_outage_hops(params: SystemParams, cfg: SimConfig) -> dict[str, MetricEstimate]:
    """First-hop-only and two-hop outage frequencies from the same trials."""

    def kernel(rng, m):
        t = sample_trials(params, cfg, rng, m)
        sir_ac, sir_cb = hop_sirs(params, t)
        first = sir_ac < params.theta
        return np.column_stack([first, first | (sir_cb < params.theta)])

    s1, s2 = run_chunked(kernel, cfg.trials, cfg.seed, TAG_OUTAGE, cfg.workers, cfg.chunk_size)
    first, both = _estimates(s1, s2, cfg.trials, cfg.seed, cfg.mode)
    return {"first_hop": first, "both_hops": both}


def simulate_outage(params: SystemParams, cfg: SimConfig) -> MetricEstimate:
    """Transmission outage frequency.

    Two-hop (``min(SIR_AC, SIR_CB) < theta``) except for MMRS in
    formula-consistent mode, which counts the first hop only to match the
    closed form it validates.
    """
    hops = simulate_outage_hops(params, cfg)
    if cfg.mode == "formula_consistent" and cfg.scheme == "mmrs":
        return hops["first_hop"]
    return hops["both_hops"]


def simulate_dep(params: SystemParams, cfg: SimConfig, lam, components: bool = False):
    """Detection error probability of Willie's threshold test at ``lam``.

    Each trial draws one slot under H0 and an independent slot under H1
    and records ``1{Y0 >= lam} + 1{Y1 < lam}``. ``lam`` may be an array;
    all thresholds share the same trials. With ``components=True`` a dict
    with ``pfa``, ``pmd`` and ``zeta`` estimates is returned.
    """
    _check_power_mode(cfg)
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    k = lams.size

    def kernel(rng, m):
        h0 = sample_trials(params, cfg, rng, m)
        h1 = sample_trials(params, cfg, rng, m)
        if cfg.power_mode == "channel_inversion":
            p_sig = params.theta * (params.p_j * h1.int_c + params.sigma_c2) / h1.g_ac
        else:
            p_sig = params.p_t
        y0 = params.p_j * h0.jam_w + params.sigma_w2
        y1 = p_sig * h1.g_aw + params.p_j * h1.jam_w + params.sigma_w2
        fa = y0[:, None] >= lams
        md = y1[:, None] < lams
        return np.hstack([fa, md, fa.astype(float) + md])

    s1, s2 = run_chunked(kernel, cfg.trials, cfg.seed, TAG_DEP, cfg.workers, cfg.chunk_size)
    est = _estimates(s1, s2, cfg.trials, cfg.seed, cfg.mode)
    out = {"pfa": est[:k], "pmd": est[k:2 * k], "zeta": est[2 * k:]}
    if np.ndim(lam) == 0:
        out = {key: v[0] for key, v in out.items()}
    return out if components else out["zeta"]


@dataclass(frozen=True)
class RateEstimate:
    unconditional: MetricEstimate
    conditional: MetricEstimate  # given no outage on either hop
    success: MetricEstimate


def simulate_rates(params: SystemParams, cfg: SimConfig) -> RateEstimate:
    def kernel(rng, m):
        t = sample_trials(params, cfg, rng, m)
        sir_ac, sir_cb = hop_sirs(params, t)
        rate = np.minimum(np.log2(1 + sir_ac), np.log2(1 + sir_cb))
        ok = (sir_ac >= params.theta) & (sir_cb >= params.theta)
        return np.column_stack([rate, ok, rate * ok, rate * rate * ok])

    s1, s2 = run_chunked(kernel, cfg.trials, cfg.seed, TAG_RATE, cfg.workers, cfg.chunk_size)
    unconditional, success = _estimates(s1[:2], s2[:2], cfg.trials, cfg.seed, cfg.mode)
    n_ok = s1[1]
    if n_ok > 1:
        mean = s1[2] / n_ok
        var = max(s1[3] / n_ok - mean * mean, 0.0) * n_ok / (n_ok - 1)
        conditional = MetricEstimate(float(mean), Z95 * math.sqrt(var / n_ok), int(n_ok), cfg.seed, cfg.mode)
    else:
        conditional = MetricEstimate(0.0, math.inf, int(n_ok), cfg.seed, cfg.mode)
    return RateEstimate(unconditional, conditional, success)


def simulate_expected_min_rate(params: SystemParams, cfg: SimConfig, conditional: bool = False) -> MetricEstimate:
    """Mean of ``min(log2(1 + SIR_AC), log2(1 + SIR_CB))`` in bits/s/Hz.

    By default the mean runs over all slots; ``conditional=True`` averages
    only over slots where neither hop is in outage.
    """
    r = simulate_rates(params, cfg)
    return r.conditional if conditional else r.unconditional


def simulate_mmrs_gain_cdf(x_grid, n: int, cfg: SimConfig) -> list[MetricEstimate]:
    """Empirical CDF of the MMRS-selected relay's first-hop gain on ``x_grid``."""
    xs = np.asarray(x_grid, dtype=float).ravel()
    if xs.size == 0:
        raise InvalidParameterError("x_grid must be non-empty")
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")

    def kernel(rng, m):
        g = rng.standard_exponential((m, 2, n))
        sel = select_mmrs(g[:, 0], g[:, 1])
        chosen = g[np.arange(m), 0, sel]
        return chosen[:, None] <= xs

    s1, s2 = run_chunked(kernel, cfg.trials, cfg.seed, TAG_GAIN_CDF, cfg.workers, cfg.chunk_size)
    return _estimates(s1, s2, cfg.trials, cfg.seed, cfg.mode)


def simulate_detection_fixed(
    l: int,
    lam,
    sigma_w2: float,
    p_sig: float,
    p_j: float,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = 16_384,
) -> dict:
    """P_FA, P_MD and their sum with exactly ``l`` jammers and signal power ``p_sig`` at Willie.

    H0: ``p_j * S + sigma_w2``; H1: ``p_sig * X + p_j * S' + sigma_w2`` with
    ``S, S' ~ Erlang(l)`` and ``X ~ Exp(1)`` all independent.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if l < 0:
        raise InvalidParameterError(f"l must be >= 0, got {l}")
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    k = lams.size

    def kernel(rng, m):
        s0 = rng.standard_exponential((m, l)).sum(axis=-1)
        s1_ = rng.standard_exponential((m, l)).sum(axis=-1)
        x = rng.standard_exponential(m)
        y0 = p_j * s0 + sigma_w2
        y1 = p_sig * x + p_j * s1_ + sigma_w2
        fa = y0[:, None] >= lams
        md = y1[:, None] < lams
        return np.hstack([fa, md, fa.astype(float) + md])

    s1, s2 = run_chunked(kernel, trials, seed, TAG_DETECTION, workers, chunk_size)
    est = _estimates(s1, s2, trials, seed, "fixed_jammers")
    out = {"pfa": est[:k], "pmd": est[k:2 * k], "zeta": est[2 * k:]}
    if np.ndim(lam) == 0:
        out = {key: v[0] for key, v in out.items()}
    return out


def sample_mmrs_phi(params: SystemParams, cfg: SimConfig, count: int) -> np.ndarray:
    """Sampled ratios ``phi = P_J g_ac / (theta (P_J sum g_jc + sigma_c2))`` under MMRS selection.

    ``phi`` is the jammer-to-signal power ratio at Willie when Alice uses
    channel-inversion power toward Carol.
    """
    cfg = cfg.replace(scheme="mmrs")

    def kernel(rng, m):
        t = sample_trials(params, cfg, rng, m)
        return params.p_j * t.g_ac / (params.theta * (params.p_j * t.int_c + params.sigma_c2))

    return collect_chunked(kernel, count, cfg.seed, TAG_PHI, cfg.chunk_size)


class HopState(NamedTuple):
    """Per-trial hop gains and interference sums that do not depend on any power level.

    Sharing one state across a sweep over ``p_t`` or ``p_j`` gives every
    sweep point the same channel draws (common random numbers).
    """

    g_ac: np.ndarray
    g_cb: np.ndarray
    int_c: np.ndarray
    int_b: np.ndarray
    seed: int
    mode: str


def sample_hop_state(params: SystemParams, cfg: SimConfig) -> HopState:
    """Draw the trials of :func:`simulate_rates` (same seed, tag and chunks) and keep them."""

    def kernel(rng, m):
        t = sample_trials(params, cfg, rng, m)
        return np.column_stack([t.g_ac, t.g_cb, t.int_c, t.int_b])

    cols = collect_chunked(kernel, cfg.trials, cfg.seed, TAG_RATE, cfg.chunk_size)
    return HopState(cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], cfg.seed, cfg.mode)


def min_rate_from_state(state: HopState, params: SystemParams) -> MetricEstimate:
    """Unconditional mean min-rate over a stored :class:`HopState` at the powers in ``params``."""
    sir_ac = params.p_t * state.g_ac / (params.p_j * state.int_c + params.sigma_c2)
    sir_cb = params.p_t * state.g_cb / (params.p_j * state.int_b + params.sigma_b2)
    rate = np.minimum(np.log2(1 + sir_ac), np.log2(1 + sir_cb))
    return _estimate(math.fsum(rate), math.fsum(rate * rate), rate.size, state.seed, state.mode)

"""System parameters, Rayleigh fading draws, relay and jammer selection.

All gains are squared magnitudes of unit-variance circularly symmetric
complex Gaussian coefficients, i.e. Exponential(1) variates. Every sampler
takes an explicit ``numpy.random.Generator`` so that callers control the
stream; :func:`substream` derives independent generators from
``(seed, *key)`` through ``numpy.random.SeedSequence`` spawn keys.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParameterError

SIGMA2_MINUS_5_DB = 10 ** (-0.5)


def db_to_linear(x_db):
    """Convert decibels to a linear power ratio (watts for dBW inputs)."""
    out = np.power(10.0, np.asarray(x_db, dtype=float) / 10)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SystemParams:
    """Scalar parameters of the two-hop relay network.

    Powers and noise variances are linear (watts). Defaults are the
    parameter set used for the detection-error validation figure: 20
    relays, 5 W covert power, 1 W jammers, gain threshold 0.3, SIR
    threshold 1 and -5 dB noise at every receiver.
    """

    n: int = 20
    p_t: float = 5.0
    p_j: float = 1.0
    p_max: float = 10.0
    alpha: float = 0.3
    theta: float = 1.0
    sigma_w2: float = SIGMA2_MINUS_5_DB
    sigma_c2: float = SIGMA2_MINUS_5_DB
    sigma_b2: float = SIGMA2_MINUS_5_DB
    epsilon_c: float = 0.1

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("p_t", "p_j", "p_max", "alpha", "theta", "sigma_w2", "sigma_c2", "sigma_b2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
        if self.p_t > self.p_max:
            raise InvalidParameterError(f"p_t={self.p_t} exceeds p_max={self.p_max}")
        if self.p_j > self.p_max:
            raise InvalidParameterError(f"p_j={self.p_j} exceeds p_max={self.p_max}")
        if not 0 < self.epsilon_c < 1:
            raise InvalidParameterError(f"epsilon_c must lie in (0, 1), got {self.epsilon_c!r}")

    @property
    def rrs_closed_form_valid(self) -> bool:
        return self.p_t > self.p_j

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


class Hop(str, Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class JammerSet:
    hop: Hop
    members: tuple[int, ...]

    @property
    def l(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ChannelRealization:
    """Squared channel gains for one time slot (or a batch of slots).

    Per-relay fields have the relay axis last, so a batch of ``m`` slots
    stores arrays of shape ``(m, n)`` and scalar links have shape ``(m,)``.
    ``g_jc[..., i]`` is the gain from relay ``i`` to the selected relay;
    the entry of the selected relay itself is unused.
    """

    g_ac: np.ndarray
    g_cb: np.ndarray
    g_aw: np.ndarray
    g_cw: np.ndarray
    g_jw: np.ndarray
    g_jc: np.ndarray
    g_jb: np.ndarray

    @property
    def n(self) -> int:
        return self.g_ac.shape[-1]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``(seed, *key)``.

    Distinct keys map to distinct ``SeedSequence`` spawn keys, whose
    hashed entropy gives statistically independent PCG64 states; equal
    keys always reproduce the same sequence.
    """
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def sample_realization(params: SystemParams, rng: np.random.Generator, size=None) -> ChannelRealization:
    """Draw all link gains as i.i.d. Exponential(1) variates.

    With ``size=None`` one slot is drawn; otherwise ``size`` slots.
    """
    n = params.n
    batch = () if size is None else (int(size),)
    draws = rng.standard_exponential(size=batch + (5 * n + 2,))
    return ChannelRealization(
        g_ac=draws[..., 0:n],
        g_cb=draws[..., n:2 * n],
        g_jw=draws[..., 2 * n:3 * n],
        g_jc=draws[..., 3 * n:4 * n],
        g_jb=draws[..., 4 * n:5 * n],
        g_aw=draws[..., 5 * n],
        g_cw=draws[..., 5 * n + 1],
    )


def sample_realization_cgauss(params: SystemParams, rng: np.random.Generator, size=None) -> ChannelRealization:
    """Same distribution as :func:`sample_realization`, built from |h|^2 of CN(0, 1) taps.

    Kept as a cross-check of the direct exponential sampler.
    """
    n = params.n
    batch = () if size is None else (int(size),)
    re_im = rng.standard_normal(size=batch + (5 * n + 2, 2))
    g = 0.5 * (re_im[..., 0] ** 2 + re_im[..., 1] ** 2)
    return ChannelRealization(
        g_ac=g[..., 0:n],
        g_cb=g[..., n:2 * n],
        g_jw=g[..., 2 * n:3 * n],
        g_jc=g[..., 3 * n:4 * n],
        g_jb=g[..., 4 * n:5 * n],
        g_aw=g[..., 5 * n],
        g_cw=g[..., 5 * n + 1],
    )


def sample_truncated_exp(alpha: float, rng: np.random.Generator, size) -> np.ndarray:
    """Exponential(1) conditioned on ``[0, alpha]``, by inverse CDF."""
    u = rng.random(size)
    return -np.log1p(u * np.expm1(-alpha))


def select_rrs(n: int, rng: np.random.Generator, size=None):
    """Uniformly random relay index in ``[0, n)``."""
    if n < 1:
        raise InvalidParameterError(f"need at least one relay, got n={n}")
    return rng.integers(0, n, size=size)


def select_mmrs(g_ac, g_cb):
    """Index maximizing ``min(g_ac[i], g_cb[i])`` along the last axis.

    Ties go to the lowest index.
    """
    g_ac = np.asarray(g_ac, dtype=float)
    g_cb = np.asarray(g_cb, dtype=float)
    if g_ac.shape != g_cb.shape:
        raise InvalidParameterError(f"gain arrays differ in shape: {g_ac.shape} vs {g_cb.shape}")
    if g_ac.ndim == 0 or g_ac.shape[-1] == 0:
        raise InvalidParameterError("gain lists must be non-empty")
    idx = np.argmax(np.minimum(g_ac, g_cb), axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def select_jammers(gains_to_receiver, alpha: float, selected: int, hop: Hop | str) -> JammerSet:
    """Relays other than ``selected`` whose gain to the hop's receiver is below ``alpha``."""
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be > 0, got {alpha!r}")
    gains = np.asarray(gains_to_receiver, dtype=float)
    if not 0 <= selected < gains.shape[-1]:
        raise InvalidParameterError(f"selected={selected} outside [0, {gains.shape[-1]})")
    members = tuple(int(i) for i in np.flatnonzero(gains < alpha) if i != selected)
    return JammerSet(Hop(hop), members)


def jammer_mask(gains_to_receiver: np.ndarray, alpha: float, selected: np.ndarray) -> np.ndarray:
    """Batch form of :func:`select_jammers`: boolean mask of shape ``(m, n)``."""
    mask = np.asarray(gains_to_receiver) < alpha
    mask[np.arange(mask.shape[0]), selected] = False
    return mask


def default_jammer_count(n: int, alpha: float) -> int:
    """Expected number of threshold-eligible jammers, rounded half up.

    Each of the ``n - 1`` idle relays qualifies with probability
    ``1 - exp(-alpha)``.
    """
    return int(math.floor((n - 1) * -math.expm1(-alpha) + 0.5))

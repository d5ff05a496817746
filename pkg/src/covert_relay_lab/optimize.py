"""Maximum covert rate over the transmit power ``p_t`` under a covertness constraint.

For a scheme and parameter set the problem is::

    maximize   R(p_t) = (1 - P_out(p_t)) * E[min(R_AC, R_CB)](p_t)
    subject to zeta*(p_t) >= 1 - epsilon_c,  0 < p_t <= p_max

``zeta*`` is Willie's minimum detection error over his threshold. It is
analytic and cheap. ``R`` combines the analytic outage with a Monte Carlo
mean min-rate drawn once per problem and reused at every probe, so nearby
powers are compared on identical channel draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _opt

from . import detection, rate
from .errors import InvalidParameterError
from .model import SystemParams, default_jammer_count
from .montecarlo import SimConfig, sample_hop_state, sample_mmrs_phi, min_rate_from_state

BINDING = ("covertness", "power_cap", "interior", "none_feasible")
FADING_CONTEXTS = 10_000
_PHI_SEED = 20_240_601
_EXACT_GRID_FLOOR = 1e-3  # lowest probed p_t as a fraction of p_max


@dataclass(frozen=True)
class Probe:
    p_t: float
    zeta_star: float
    covert_rate: float
    feasible: bool


@dataclass(frozen=True)
class OptimizationResult:
    p_t_star: float
    r_star: float
    binding_constraint: str
    zeta_at_star: float
    trace: list[Probe] = field(default_factory=list)
    epsilon_c: float = math.nan
    zeta_worst_at_star: float = math.nan

    @property
    def residual(self) -> float:
        """Constraint slack ``zeta* - (1 - epsilon_c)``; nan when nothing is feasible."""
        return self.zeta_at_star - (1 - self.epsilon_c)


class CovertRateProblem:
    """Cached ``zeta*(p_t)`` and ``R(p_t)`` for one scheme and parameter set.

    Args:
        scheme: ``"rrs"`` or ``"mmrs"``.
        params: system parameters; ``p_t`` and ``epsilon_c`` are ignored.
        cfg: Monte Carlo settings for the min-rate estimate.
        detection_model: ``"exact"`` or ``"paper"`` detection error.
        jamming: ``False`` silences every jammer (Willie hears noise only).
        state: optional :class:`~covert_relay_lab.montecarlo.HopState` to reuse.
            It must come from the same scheme, ``n``, ``alpha`` and jammer
            settings; powers and noise levels may differ.
    """

    def __init__(
        self,
        scheme: str,
        params: SystemParams,
        cfg: SimConfig | None = None,
        detection_model: str = "exact",
        jamming: bool = True,
        state=None,
    ):
        if scheme not in ("rrs", "mmrs"):
            raise InvalidParameterError(f"scheme must be 'rrs' or 'mmrs', got {scheme!r}")
        if detection_model not in detection.MODELS:
            raise InvalidParameterError(f"detection_model must be one of {detection.MODELS}")
        cfg = cfg or SimConfig()
        self.cfg = cfg.replace(scheme=scheme, jamming=jamming and cfg.jamming)
        if self.cfg.power_mode == "channel_inversion" and scheme != "mmrs":
            raise InvalidParameterError("power_mode='channel_inversion' only applies to the MMRS scheme")
        self.scheme = scheme
        self.params = params
        self.model = detection_model
        if not self.cfg.jamming:
            self.l = 0
        elif self.cfg.n_jammers is not None:
            self.l = self.cfg.n_jammers
        else:
            self.l = default_jammer_count(params.n, params.alpha)
        self._zeta: dict[float, tuple[float, float]] = {}
        self._rate: dict[float, float] = {}
        self._state = state
        self._fading = None

    # -- constraint

    @property
    def p_min(self) -> float:
        """Lowest probed power: just above ``p_j`` for the paper model, ``p_max / 1000`` otherwise."""
        p = self.params
        if self.model == "paper" and not self._constant_zeta:
            return p.p_j * (1 + 1e-6)
        return p.p_max * _EXACT_GRID_FLOOR

    @property
    def _constant_zeta(self) -> bool:
        return self.scheme == "mmrs" and self.cfg.power_mode == "channel_inversion"

    def zeta_star(self, p_t: float) -> tuple[float, float]:
        """(constraint value, worst case) of ``zeta*`` at ``p_t``.

        Both entries coincide except for MMRS with channel-inversion power,
        where the constraint uses the fading average and the worst case is
        the minimum over sampled contexts.
        """
        p_t = float(p_t)
        if p_t in self._zeta:
            return self._zeta[p_t]
        if self._constant_zeta:
            if self._fading is None:
                phis = sample_mmrs_phi(self.params, self.cfg.replace(seed=_PHI_SEED), FADING_CONTEXTS)
                if self.l == 0:
                    self._fading = (0.0, 0.0)
                else:
                    f = detection.fading_zeta_star(phis, self.l, self.params, self.model)
                    self._fading = (0.0, 0.0) if math.isnan(f.mean) else (f.mean, f.worst)
            val = self._fading
        elif self.l == 0:
            val = (0.0, 0.0)
        else:
            if self.model == "paper" and not p_t > self.params.p_j:
                val = (math.nan, math.nan)
            else:
                _, z = detection.zeta_star_batch(self.l, self.params.sigma_w2, np.array([p_t]), self.params.p_j, self.model)
                val = (float(z[0]), float(z[0]))
        self._zeta[p_t] = val
        return val

    # -- objective

    def outage(self, p_t: float) -> float:
        prm = self.params.replace(p_t=p_t)
        if self.scheme == "rrs":
            l_rx = 0 if not self.cfg.jamming else prm.n - 1
            return rate.outage_rrs(prm, n_jammers=l_rx)
        return rate.outage_mmrs(prm, self.l)

    def covert_rate(self, p_t: float) -> float:
        p_t = float(p_t)
        if p_t not in self._rate:
            if self._state is None:
                self._state = sample_hop_state(self.params, self.cfg)
            prm = self.params.replace(p_t=p_t)
            r = min_rate_from_state(self._state, prm).mean
            self._rate[p_t] = rate.covert_rate(self.outage(p_t), r)
        return self._rate[p_t]

    def probe(self, p_t: float, epsilon_c: float) -> Probe:
        z, _ = self.zeta_star(p_t)
        return Probe(float(p_t), z, self.covert_rate(p_t), bool(z >= 1 - epsilon_c))

    # -- search

    def solve(self, epsilon_c: float, grid_size: int = 32, tol: float = 1e-4) -> OptimizationResult:
        """Best feasible ``p_t`` for covertness level ``epsilon_c``.

        Probes a log-spaced grid. If ``zeta*`` is nonincreasing on the grid
        and ``R`` nondecreasing over its feasible part, the answer is the
        feasibility boundary (found by bisection) or ``p_max``. Otherwise the
        best feasible grid point is refined by golden-section search inside
        its feasible neighbourhood.
        """
        if not 0 < epsilon_c < 1:
            raise InvalidParameterError(f"epsilon_c must lie in (0, 1), got {epsilon_c}")
        if grid_size < 8:
            raise InvalidParameterError(f"grid_size must be >= 8, got {grid_size}")
        p_max = self.params.p_max
        grid = np.geomspace(self.p_min, p_max, grid_size)
        trace = [self.probe(p, epsilon_c) for p in grid]
        feasible = [t for t in trace if t.feasible]

        def result(p_t, binding):
            if p_t is None:
                return OptimizationResult(math.nan, 0.0, "none_feasible", math.nan, trace, epsilon_c)
            z, worst = self.zeta_star(p_t)
            return OptimizationResult(float(p_t), self.covert_rate(p_t), binding, z, trace, epsilon_c, worst)

        if not feasible:
            return result(None, "none_feasible")

        zs = np.array([t.zeta_star for t in trace])
        rs = np.array([t.covert_rate for t in feasible])
        monotone = bool(np.all(np.diff(zs) <= 1e-12)) and bool(np.all(np.diff(rs) >= -1e-12))
        if monotone:
            if trace[-1].feasible:
                return result(p_max, "power_cap")
            k = max(i for i, t in enumerate(trace) if t.feasible)
            lo, hi = trace[k].p_t, trace[k + 1].p_t
            while (hi - lo) > tol * lo:
                mid = math.sqrt(lo * hi)
                t = self.probe(mid, epsilon_c)
                trace.append(t)
                if t.feasible:
                    lo = mid
                else:
                    hi = mid
            return result(lo, "covertness")

        best = max(range(len(trace)), key=lambda i: (trace[i].feasible, trace[i].covert_rate))
        a = trace[max(best - 1, 0)].p_t
        b = trace[min(best + 1, len(trace) - 1)].p_t

        def neg(logp):
            t = self.probe(math.exp(logp), epsilon_c)
            trace.append(t)
            return -t.covert_rate if t.feasible else math.inf

        if b > a:
            _opt.minimize_scalar(neg, bounds=(math.log(a), math.log(b)), method="bounded",
                                 options={"xatol": tol})
        winner = max((t for t in trace if t.feasible), key=lambda t: t.covert_rate)
        binding = "power_cap" if winner.p_t >= p_max * (1 - 1e-12) else "interior"
        return result(winner.p_t, binding)


def max_covert_rate(
    scheme: str,
    params: SystemParams,
    cfg: SimConfig | None = None,
    grid_size: int = 32,
    tol: float = 1e-4,
    detection_model: str = "exact",
    jamming: bool = True,
    epsilon_c: float | None = None,
) -> OptimizationResult:
    """Solve the covert-rate maximization for one scheme.

    ``epsilon_c`` defaults to ``params.epsilon_c``. For sweeps over
    ``epsilon_c`` build one :class:`CovertRateProblem` and call
    :meth:`CovertRateProblem.solve` repeatedly to share cached probes.
    """
    problem = CovertRateProblem(scheme, params, cfg, detection_model, jamming)
    return problem.solve(params.epsilon_c if epsilon_c is None else epsilon_c, grid_size, tol)

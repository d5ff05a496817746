"""Data behind each evaluation figure, one :class:`Table` per plotted curve.

Every function takes a base :class:`SystemParams` and :class:`SimConfig`
(trials and seed come from the caller) and overrides only the settings the
figure fixes. Sweep ranges without a stated numeric range are chosen
here and written into each table's notes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import detection, rate
from .model import SIGMA2_MINUS_5_DB, SystemParams, db_to_linear, default_jammer_count
from .montecarlo import (
    SimConfig,
    sample_hop_state,
    sample_mmrs_phi,
    min_rate_from_state,
    simulate_dep,
    simulate_outage,
    simulate_outage_hops,
)
from .optimize import CovertRateProblem

ALPHAS = (0.3, 0.5, 0.7)
FIG2_N = (1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50)
FIG3_LAMBDA = tuple(np.round(np.linspace(0.25, 20.0, 80), 6))
FIG4_PT = tuple(float(x) for x in np.arange(1, 11))
FIG5_PJ = tuple(float(x) for x in np.round(np.geomspace(0.1, 5.0, 16), 6))
FIG5_SIGMA_DB = (0.0, -5.0, -10.0)
FIG5_EPSILON = 0.5
FIG6_EPSILON = tuple(round(0.05 * k, 2) for k in range(1, 11))
PHI_CONTEXTS = 10_000


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _noise(params: SystemParams, sigma2: float = SIGMA2_MINUS_5_DB) -> SystemParams:
    return params.replace(sigma_w2=sigma2, sigma_c2=sigma2, sigma_b2=sigma2)


def _fig_params(params: SystemParams, **kw) -> SystemParams:
    """Defaults of the evaluation section: 5 W covert power, 1 W jammers, theta = 1, -5 dB noise."""
    base = _noise(params).replace(p_max=max(params.p_max, 10.0), p_t=5.0, p_j=1.0, theta=1.0)
    return base.replace(**kw)


def fig2(params: SystemParams, cfg: SimConfig, ns=FIG2_N, alphas=ALPHAS) -> list[Table]:
    """Transmission outage versus relay count, both schemes."""
    tables = []
    for scheme in ("rrs", "mmrs"):
        for alpha in alphas:
            t = Table(
                f"fig2_{scheme}_alpha{alpha:g}",
                ["n", "alpha", "l", "p_to_analytic", "p_to_raw", "clamped", "p_to_mc", "ci",
                 "p_to_scheme_mc", "scheme_ci", "p_to_both_hops_mc", "both_hops_ci"],
                notes=[f"{scheme} outage vs n; P_T=5 W, P_J=1 W, theta=1, sigma_c2=sigma_b2=-5 dB",
                       "p_to_mc: formula-consistent jammers; p_to_scheme_mc: literal threshold rule",
                       "ci: 95% half-width"],
            )
            for n in ns:
                p = _fig_params(params, n=n, alpha=alpha)
                c = cfg.replace(scheme=scheme, mode="formula_consistent")
                if scheme == "rrs":
                    l = n - 1
                    raw = rate.outage_rrs(p)
                else:
                    l = default_jammer_count(n, alpha)
                    raw = rate.outage_mmrs_raw(p, l)
                hops = simulate_outage_hops(p, c)
                fc = hops["first_hop"] if scheme == "mmrs" else hops["both_hops"]
                sm = simulate_outage(p, c.replace(mode="scheme"))
                t.rows.append([n, alpha, l, min(max(raw, 0.0), 1.0), raw, int(not 0 <= raw <= 1), fc.mean,
                               fc.half_width, sm.mean, sm.half_width, hops["both_hops"].mean,
                               hops["both_hops"].half_width])
            tables.append(t)
    return tables


def fig3(params: SystemParams, cfg: SimConfig, lambdas=FIG3_LAMBDA) -> list[Table]:
    """Detection error versus Willie's threshold, both schemes."""
    p = _fig_params(params, n=20, alpha=0.3)
    l = default_jammer_count(p.n, p.alpha)
    lam = np.asarray(lambdas, dtype=float)
    sw, pj = p.sigma_w2, p.p_j

    rrs = Table("fig3_rrs", ["lambda", "zeta_analytic", "zeta_paper_raw", "clamped", "zeta_exact", "zeta_mc", "ci"])
    raw = detection.dep_rrs_raw(l, lam, p)
    exact = detection.zeta_exact(l, lam, sw, p.p_t, pj)
    mc = simulate_dep(p, cfg.replace(scheme="rrs", mode="formula_consistent"), lam)
    for i, x in enumerate(lam):
        rrs.rows.append([x, min(max(raw[i], 0.0), 1.0), raw[i], int(not 0 <= raw[i] <= 1), exact[i],
                         mc[i].mean, mc[i].half_width])
    opt_p = detection.optimal_threshold("rrs", l, p, model="paper")
    opt_e = detection.optimal_threshold("rrs", l, p, model="exact")
    rrs.notes = [
        f"RRS, n=20, P_T=5 W, P_J=1 W, alpha=0.3, sigma_w2=-5 dB, l={l} jammers at Willie",
        f"closed form: lambda*={opt_p.lambda_star:.6g} zeta*={opt_p.zeta_star:.6g} clamped={int(opt_p.clamped)}",
        f"exact: lambda*={opt_e.lambda_star:.6g} zeta*={opt_e.zeta_star:.6g}",
    ]

    mcfg = cfg.replace(scheme="mmrs", mode="formula_consistent", power_mode="channel_inversion")
    phis = sample_mmrs_phi(p, mcfg, PHI_CONTEXTS)
    valid = phis < 1
    p_sig = pj / phis
    mm = Table("fig3_mmrs", ["lambda", "zeta_analytic", "paper_valid_fraction", "zeta_exact", "zeta_mc", "ci"])
    mc = simulate_dep(p, mcfg, lam)
    for i, x in enumerate(lam):
        ex = float(np.mean(detection.zeta_exact(l, x, sw, p_sig, pj)))
        if valid.any():
            pap = float(np.mean(np.clip(detection.zeta_paper_raw(l, x, sw, p_sig[valid], pj), 0, 1)))
        else:
            pap = math.nan
        mm.rows.append([x, pap, float(valid.mean()), ex, mc[i].mean, mc[i].half_width])
    fz = detection.fading_zeta_star(phis, l, p, "exact")
    mm.notes = [
        f"MMRS with channel-inversion power, same settings; analytic columns average over {PHI_CONTEXTS} sampled contexts",
        "zeta_analytic averages the clamped closed form over contexts with phi < 1 only",
        f"exact fading-average zeta* over contexts: mean={fz.mean:.6g} worst={fz.worst:.6g}",
    ]
    return [rrs, mm]


def fig4(params: SystemParams, cfg: SimConfig, p_ts=FIG4_PT, alphas=ALPHAS) -> list[Table]:
    """Covert rate versus transmit power at fixed jamming power."""
    tables = []
    for scheme in ("rrs", "mmrs"):
        for alpha in alphas:
            p0 = _fig_params(params, n=20, alpha=alpha)
            c = cfg.replace(scheme=scheme, mode="formula_consistent")
            state = sample_hop_state(p0, c)
            prob = CovertRateProblem(scheme, p0, c, state=state)
            t = Table(
                f"fig4_{scheme}_alpha{alpha:g}",
                ["p_t", "alpha", "p_out_analytic", "p_out_mc", "p_out_ci", "min_rate_mc", "min_rate_ci",
                 "covert_rate", "covert_rate_ci"],
                notes=[f"{scheme} covert rate vs P_T; n=20, P_J=1 W, theta=1, sigma_c2=sigma_b2=-5 dB",
                       "covert_rate = (1 - p_out_analytic) * min_rate_mc; all P_T share channel draws"],
            )
            for pt in p_ts:
                p = p0.replace(p_t=pt)
                po = prob.outage(pt)
                mr = min_rate_from_state(state, p)
                om = simulate_outage(p, c)
                t.rows.append([pt, alpha, po, om.mean, om.half_width, mr.mean, mr.half_width,
                               (1 - po) * mr.mean, (1 - po) * mr.half_width])
            tables.append(t)
    return tables


def fig5(params: SystemParams, cfg: SimConfig, p_js=FIG5_PJ, sigmas_db=FIG5_SIGMA_DB,
         epsilon_c: float = FIG5_EPSILON) -> list[Table]:
    """Maximum covert rate versus jamming power for three noise levels."""
    tables = []
    for scheme in ("rrs", "mmrs"):
        c = cfg.replace(scheme=scheme, mode="formula_consistent")
        base = _fig_params(params, n=20, alpha=0.3)
        state = sample_hop_state(base, c)
        for s_db in sigmas_db:
            t = Table(
                f"fig5_{scheme}_sigma{s_db:g}dB",
                ["p_j", "sigma2_db", "p_t_star", "r_star", "binding_constraint", "zeta_at_star", "residual"],
                notes=[f"{scheme} maximum covert rate vs P_J; n=20, alpha=0.3, sigma_c2=sigma_b2=sigma_w2={s_db:g} dB",
                       f"epsilon_c={epsilon_c}, P_max={base.p_max:g} W; all P_J share channel draws"],
            )
            for pj in p_js:
                p = _noise(base, db_to_linear(s_db)).replace(p_j=pj)
                r = CovertRateProblem(scheme, p, c, state=state).solve(epsilon_c)
                t.rows.append([pj, s_db, r.p_t_star, r.r_star, r.binding_constraint, r.zeta_at_star, r.residual])
            tables.append(t)
    return tables


def _epsilon_table(name, problem, epsilons, extra, notes) -> Table:
    t = Table(name, ["epsilon_c", *extra.keys(), "p_t_star", "r_star", "binding_constraint", "zeta_at_star",
                     "residual"], notes=notes)
    for eps in epsilons:
        r = problem.solve(eps)
        t.rows.append([eps, *extra.values(), r.p_t_star, r.r_star, r.binding_constraint, r.zeta_at_star, r.residual])
    return t


def fig6(params: SystemParams, cfg: SimConfig, epsilons=FIG6_EPSILON, alphas=ALPHAS) -> list[Table]:
    """Maximum covert rate versus covertness requirement."""
    tables = []
    for scheme in ("rrs", "mmrs"):
        for alpha in alphas:
            p = _fig_params(params, n=20, alpha=alpha)
            prob = CovertRateProblem(scheme, p, cfg.replace(scheme=scheme, mode="formula_consistent"))
            tables.append(_epsilon_table(
                f"fig6_{scheme}_alpha{alpha:g}", prob, epsilons, {"alpha": alpha},
                [f"{scheme} maximum covert rate vs epsilon_c; n=20, P_J=1 W, sigma2=-5 dB, P_max={p.p_max:g} W"],
            ))
    return tables


def fig7(params: SystemParams, cfg: SimConfig, epsilons=FIG6_EPSILON) -> list[Table]:
    """Maximum covert rate with and without jamming."""
    tables = []
    p = _fig_params(params, n=20, alpha=0.3)
    for scheme in ("rrs", "mmrs"):
        for jamming in (True, False):
            prob = CovertRateProblem(scheme, p, cfg.replace(scheme=scheme, mode="formula_consistent"),
                                     jamming=jamming)
            tag = "jamming" if jamming else "no_jamming"
            tables.append(_epsilon_table(
                f"fig7_{scheme}_{tag}", prob, epsilons, {"jamming": int(jamming)},
                [f"{scheme} maximum covert rate vs epsilon_c, {tag.replace('_', ' ')}; n=20, alpha=0.3, P_J=1 W",
                 "without jammers Willie sees a deterministic noise floor, so no power is covert"],
            ))
    return tables


FIGURES = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7}

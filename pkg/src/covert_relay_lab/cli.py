"""Command-line entry point: ``covert-relay-lab <command> --config file.json``.

Exit status is 0 on success, 1 for invalid configuration or parameters and
2 for any other runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import sys
from pathlib import Path

from . import __version__, detection, figures, rate
from .config import ConfigError, ExperimentConfig, load_config
from .errors import ClosedFormInvalidError, InvalidParameterError
from .model import default_jammer_count
from .montecarlo import SCHEMES, simulate_dep, simulate_outage_hops, simulate_rates
from .optimize import CovertRateProblem

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def render_csv(columns, rows, notes=(), timestamp=True) -> str:
    buf = io.StringIO()
    buf.write(f"# covert-relay-lab {__version__}\n")
    if timestamp:
        buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, notes=(), timestamp=True):
    text = render_csv(columns, rows, notes, timestamp)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _sibling(path, suffix):
    if path is None or str(path) == "-":
        return None
    p = Path(path)
    return p.with_name(p.stem + suffix + p.suffix)


def _metrics_rows(cfg: ExperimentConfig):
    p = cfg.params
    l = default_jammer_count(p.n, p.alpha)
    rows = [("n", p.n), ("l_default", l), ("rrs_closed_form_valid", int(p.rrs_closed_form_valid))]
    rows.append(("outage_rrs", rate.outage_rrs(p)))
    raw = rate.outage_mmrs_raw(p, l)
    rows += [("outage_mmrs", min(max(raw, 0.0), 1.0)), ("outage_mmrs_raw", raw),
             ("outage_mmrs_clamped", int(not 0 <= raw <= 1))]
    for model in detection.MODELS:
        try:
            a = detection.optimal_threshold("rrs", l, p, model=model)
        except ClosedFormInvalidError:
            rows.append((f"dep_{model}_valid", 0))
            continue
        rows += [(f"dep_{model}_valid", 1), (f"lambda_star_{model}", a.lambda_star), (f"zeta_star_{model}", a.zeta_star),
                 (f"pfa_at_star_{model}", a.pfa_at_star), (f"pmd_at_star_{model}", a.pmd_at_star),
                 (f"zeta_clamped_{model}", int(a.clamped)), (f"zeta_interior_{model}", int(a.interior))]
    return rows


def cmd_metrics(cfg: ExperimentConfig, out, timestamp):
    rows = _metrics_rows(cfg)
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {_fmt(v)}")
    if out is not None:
        write_csv(out, ["metric", "value"], rows, timestamp=timestamp)


SIM_COLUMNS = ["sweep_variable", "sweep_value", "scheme", "metric", "lambda", "mean", "half_width", "trials", "seed", "mode"]


def cmd_simulate(cfg: ExperimentConfig, out, timestamp):
    rows = []
    var = cfg.sweep.variable if cfg.sweep else ""
    for value, p, sim in cfg.points():
        for scheme in SCHEMES:
            s = sim.replace(scheme=scheme)
            if s.power_mode == "channel_inversion" and scheme == "rrs":
                s = s.replace(power_mode="fixed_pt")
            v = "" if value is None else value
            hops = simulate_outage_hops(p, s)
            rates = simulate_rates(p, s)
            named = [("outage_first_hop", hops["first_hop"]), ("outage_both_hops", hops["both_hops"]),
                     ("expected_min_rate", rates.unconditional), ("expected_min_rate_conditional", rates.conditional),
                     ("success", rates.success)]
            for metric, e in named:
                rows.append([var, v, scheme, metric, "", e.mean, e.half_width, e.trials, e.seed, e.mode])
            for lam in cfg.lambdas or []:
                d = simulate_dep(p, s, lam, components=True)
                for metric in ("pfa", "pmd", "zeta"):
                    e = d[metric]
                    rows.append([var, v, scheme, metric, lam, e.mean, e.half_width, e.trials, e.seed, e.mode])
    write_csv(out or cfg.output_path, SIM_COLUMNS, rows, timestamp=timestamp)


OPT_COLUMNS = ["sweep_variable", "sweep_value", "scheme", "epsilon_c", "p_t_star", "r_star", "binding_constraint",
               "zeta_at_star", "zeta_worst_at_star", "residual"]
TRACE_COLUMNS = ["sweep_variable", "sweep_value", "scheme", "epsilon_c", "probe", "p_t", "zeta_star", "covert_rate", "feasible"]


def cmd_optimize(cfg: ExperimentConfig, out, timestamp):
    rows, trace_rows = [], []
    var = cfg.sweep.variable if cfg.sweep else ""
    for value, p, sim in cfg.points():
        v = "" if value is None else value
        for scheme in SCHEMES:
            s = sim if scheme == "mmrs" or sim.power_mode == "fixed_pt" else sim.replace(power_mode="fixed_pt")
            prob = CovertRateProblem(scheme, p, s, cfg.detection_model)
            for eps in cfg.epsilon_c or [p.epsilon_c]:
                r = prob.solve(eps, cfg.grid_size, cfg.tol)
                rows.append([var, v, scheme, eps, r.p_t_star, r.r_star, r.binding_constraint, r.zeta_at_star,
                             r.zeta_worst_at_star, r.residual])
                for i, t in enumerate(r.trace):
                    trace_rows.append([var, v, scheme, eps, i, t.p_t, t.zeta_star, t.covert_rate, int(t.feasible)])
    target = out or cfg.output_path
    notes = [f"detection model: {cfg.detection_model}"]
    write_csv(target, OPT_COLUMNS, rows, notes, timestamp)
    trace_path = _sibling(target, "_trace")
    if trace_path is not None:
        write_csv(trace_path, TRACE_COLUMNS, trace_rows, notes, timestamp)


def cmd_reproduce(cfg: ExperimentConfig, figure: str, out, timestamp):
    outdir = Path(out or cfg.output_path or ".")
    if outdir.suffix == ".csv":
        outdir = outdir.parent
    for table in figures.FIGURES[figure](cfg.params, cfg.sim):
        write_csv(outdir / f"{table.name}.csv", table.columns, table.rows, table.notes, timestamp)
        print(outdir / f"{table.name}.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covert-relay-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--out", help="output CSV file (a directory for reproduce); '-' for stdout")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--trials", type=int, help="override sim.trials")
    common.add_argument("--workers", type=int, help="override sim.workers")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("metrics", parents=[common], help="closed-form metrics at one parameter point")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates as CSV")
    sub.add_parser("optimize", parents=[common], help="maximum covert rate and probe trace")
    rp = sub.add_parser("reproduce", parents=[common], help="data for one evaluation figure")
    rp.add_argument("figure", choices=sorted(figures.FIGURES))
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for name in ("seed", "trials", "workers"):
        value = getattr(args, name)
        if value is None:
            continue
        try:
            cfg.sim = cfg.sim.replace(**{name: value})
        except InvalidParameterError as exc:
            raise ConfigError(f"--{name}", str(exc)) from None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    timestamp = not args.no_timestamp
    try:
        cfg = _load(args)
        if args.command == "metrics":
            cmd_metrics(cfg, args.out, timestamp)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.out, timestamp)
        elif args.command == "optimize":
            cmd_optimize(cfg, args.out, timestamp)
        else:
            cmd_reproduce(cfg, args.figure, args.out, timestamp)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry points: run, compare-fl, sweep, validate-config.

Exit codes: 0 success, 2 anything wrong with the configuration or usage,
3 a run that finished but produced no tail data to fit.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import gpd
from .config import (
    ConfigError,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    dump_config,
    get_preset,
    read_config_file,
    sweep_path,
)
from .federated import init_model, run_centralized, run_federated
from .gpd import GpdParams, SupportError
from .report import (
    render_compare_figure,
    render_run_figure,
    render_sweep_figure,
    report_to_dict,
    summary_table,
    sweep_rows,
    write_json,
    write_sweep_csv,
    write_traces_csv,
    _version_block,
)
from .simulator import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_TAIL_DATA = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config file")
    common.add_argument("--seed", type=int, action="append", metavar="N",
                        help="run seed; repeat for several runs")
    common.add_argument("--out", default="out", metavar="DIR",
                        help="output directory (default: out)")
    common.add_argument("--policy", action="append", metavar="NAME",
                        help="power policy; repeat for several")
    common.add_argument("--preset", metavar="NAME",
                        help="named experiment preset")
    common.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="config override; repeatable")
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")

    ap = argparse.ArgumentParser(
        prog="vuenet",
        description="V2V power control simulator with federated tail fitting",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common],
                   help="simulate and write report, traces and figures")

    cmp_p = sub.add_parser("compare-fl", parents=[common],
                           help="fit the tail federated and centralized on one buffer")
    cmp_p.add_argument("--rounds", type=int, default=50,
                       help="fitting rounds (default: 50)")
    cmp_p.add_argument("--learners", type=int, default=10,
                       help="synthetic mode shard count (default: 10)")
    cmp_p.add_argument("--synthetic", metavar="SIGMA,XI,K",
                       help="skip the simulation and fit K samples drawn "
                            "from the given tail instead")

    sw = sub.add_parser("sweep", parents=[common],
                        help="run a grid over one parameter, emit long CSV")
    sw.add_argument("--param", required=True, help="config field to sweep")
    sw.add_argument("--values", required=True,
                    help="comma-separated values")

    sub.add_parser("validate-config", parents=[common],
                   help="parse, validate and echo the resolved config")
    return ap


def _resolve_data(args) -> dict:
    """File + preset + CLI overrides folded into one config mapping."""
    overrides = []
    if args.preset:
        overrides += list(get_preset(args.preset).overrides)
    overrides += args.override
    data = read_config_file(args.config) if args.config is not None else {}
    return apply_overrides(data, overrides)


def _expand(args):
    """(policy, seed) grid for run-style commands, preset-aware."""
    data = _resolve_data(args)
    base = config_from_dict(data)
    preset = get_preset(args.preset) if args.preset else None
    if args.policy:
        policies = args.policy
    elif preset:
        policies = list(preset.policies)
    else:
        policies = [base.control.policy.value]
    if args.seed:
        seeds = args.seed
    elif preset:
        seeds = list(preset.seeds)
    else:
        seeds = [base.seed]
    return data, policies, seeds


def _config_for(data: dict, policy: str, seed: int):
    d = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    return config_from_dict(
        apply_overrides(d, (f"control.policy={policy}", f"seed={seed}"))
    )


def cmd_run(args) -> int:
    data, policies, seeds = _expand(args)
    os.makedirs(args.out, exist_ok=True)
    lines = []
    for policy in policies:
        for seed in seeds:
            cfg = _config_for(data, policy, seed)
            rep = run(cfg)
            stem = f"run_{policy}_{seed}"
            write_json(os.path.join(args.out, stem + ".json"),
                       report_to_dict(rep, cfg))
            write_traces_csv(os.path.join(args.out, stem + "_traces.csv"),
                             rep.traces)
            if not args.no_figures:
                render_run_figure(os.path.join(args.out, stem + ".png"),
                                  rep.traces, cfg.control.q0)
            lines.append({
                "policy": policy,
                "seed": seed,
                "outage_prob": rep.outage_prob,
                "avg_power_w": rep.avg_power_w,
                "avg_latency_ms": rep.avg_latency_ms,
                "gpd_sigma": rep.gpd_sigma,
                "gpd_xi": rep.gpd_xi,
            })
    print(summary_table(lines))
    print(f"wrote {len(lines)} report(s) to {args.out}")
    return EXIT_OK


def _parse_synthetic(text: str) -> tuple[GpdParams, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("--synthetic takes SIGMA,XI,K")
    try:
        sigma, xi, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--synthetic: {exc}") from exc
    if k < 1:
        raise ConfigError("--synthetic: K must be positive")
    try:
        return GpdParams(sigma, xi), k
    except gpd.ParameterError as exc:
        raise ConfigError(f"--synthetic: {exc}") from exc


def _model_ccdf(params: GpdParams, xs: np.ndarray) -> list[float]:
    hi = gpd.support_upper(params)
    out = np.zeros(xs.size)
    ok = xs < hi
    if ok.any():
        out[ok] = gpd.survival(params, xs[ok])
    return out.tolist()


def cmd_compare_fl(args) -> int:
    data = _resolve_data(args)
    cfg = config_from_dict(data)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "compare_fl.json")
    doc: dict = {"version": _version_block(), "config": None}

    if args.synthetic:
        truth, k = _parse_synthetic(args.synthetic)
        if args.learners < 1:
            raise ConfigError("--learners must be positive")
        rng = np.random.default_rng(cfg.seed)
        samples = gpd.sample(truth, k, rng)
        shards = np.array_split(samples, args.learners)
        doc["synthetic"] = {"sigma": truth.sigma, "xi": truth.xi, "k": k}
    else:
        rep = run(cfg)
        shards = rep.traces.samples
        doc["sim_metrics"] = {
            "outage_prob": rep.outage_prob,
            "avg_power_w": rep.avg_power_w,
        }
    doc["config"] = config_to_dict(cfg)

    total = int(sum(np.asarray(s).size for s in shards))
    doc["total_samples"] = total
    if total == 0:
        doc["no_tail_data"] = True
        write_json(out_path, doc)
        print("no tail data: the run never crossed the outage threshold")
        print(f"wrote {out_path}")
        return EXIT_NO_TAIL_DATA

    init = init_model(cfg.fl_init_sigma, cfg.fl_init_xi, cfg.fl_init_grad)
    pooled = np.concatenate([np.asarray(s, dtype=float).ravel() for s in shards])
    fed = run_federated(shards, args.rounds, cfg.fl_step, init, cfg.seed)
    cent = run_centralized(pooled, args.rounds, cfg.fl_step, init, cfg.seed)

    xs = np.sort(pooled)
    # thin long buffers so the report stays small; ends always kept
    if xs.size > 400:
        idx = np.unique(np.linspace(0, xs.size - 1, 400).astype(int))
        xs = xs[idx]
    n = pooled.size
    empirical = [(float((pooled > x).sum()) / n) for x in xs]
    ccdf = {
        "m_kb": xs.tolist(),
        "empirical": empirical,
        "federated": _model_ccdf(fed.params, xs),
        "centralized": _model_ccdf(cent.params, xs),
    }
    doc["federated"] = {
        "sigma": fed.params.sigma,
        "xi": fed.params.xi,
        "pooled_nll": fed.nll_trace[-1],
        "comms": fed.ledger.as_dict(),
    }
    doc["centralized"] = {
        "sigma": cent.params.sigma,
        "xi": cent.params.xi,
        "pooled_nll": cent.nll_trace[-1],
        "comms": cent.ledger.as_dict(),
    }
    doc["ccdf"] = ccdf
    write_json(out_path, doc)
    if not args.no_figures:
        render_compare_figure(os.path.join(args.out, "compare_fl.png"), ccdf)
    for name in ("federated", "centralized"):
        d = doc[name]
        print(f"{name:12s} sigma={d['sigma']:.6g} xi={d['xi']:.6g} "
              f"pooled_nll={d['pooled_nll']:.6g}")
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    data = _resolve_data(args)
    dotted = sweep_path(args.param)
    raw_values = [v for v in (s.strip() for s in args.values.split(",")) if v]
    if not raw_values:
        raise ConfigError("sweep needs at least one value")
    base = config_from_dict(data)
    seeds = args.seed if args.seed else [base.seed]
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for raw in raw_values:
        for seed in seeds:
            d = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
            cfg = config_from_dict(
                apply_overrides(d, (f"{dotted}={raw}", f"seed={seed}"))
            )
            rep = run(cfg)
            rows.extend(sweep_rows(args.param, raw, seed, rep))
    path = os.path.join(args.out, f"sweep_{args.param.replace('.', '_')}.csv")
    write_sweep_csv(path, rows)
    if not args.no_figures:
        render_sweep_figure(path[:-4] + ".png", rows)
    print(f"{len(raw_values)} value(s) x {len(seeds)} seed(s); wrote {path}")
    return EXIT_OK


def cmd_validate_config(args) -> int:
    cfg = config_from_dict(_resolve_data(args))
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "compare-fl": cmd_compare_fl,
    "sweep": cmd_sweep,
    "validate-config": cmd_validate_config,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

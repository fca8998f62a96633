"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 user or input error.
Every command writes its resolved configuration as a JSON manifest next to
its outputs, and re-running a command on the same inputs reproduces its
outputs byte for byte.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import re
import sys
import time

import numpy as np

from . import gev
from .dataset import BlockSpec, extract_block_extrema
from .ensemble import EnsembleConfig, fit_ensemble, predict_arrays
from .errors import GevTreeError, SchemaMismatch
from .gev import GevParams
from .io import (
    format_instant,
    load_covariates,
    load_model,
    load_observations,
    load_training,
    save_model,
    write_series,
)
from .risk import RiskPolicy, nerc_daily_lolp, report_from_params
from .synth import LPHC_QUANTILES, SyntheticSpec, evaluate, generate, mean_crps
from .tree import TreeConfig

log = logging.getLogger("gevtree")

PRESETS = {
    # day-ahead capacity case study
    "case-study": {"members": 50, "resample_ratio": 1.0, "t_crit": 0.05,
                   "min_partition": 30, "max_iters": 40},
    # synthetic benchmark
    "benchmark": {"members": 50, "resample_ratio": 1.0, "t_crit": 1e-4,
                  "min_partition": 20, "max_iters": 40},
}


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _duration(text):
    named = {"hourly": dt.timedelta(hours=1), "daily": dt.timedelta(days=1),
             "weekly": dt.timedelta(weeks=1)}
    if text in named:
        return named[text]
    m = re.fullmatch(r"(\d+)([hd])", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad block length {text!r}")
    n = int(m.group(1))
    return dt.timedelta(hours=n) if m.group(2) == "h" else dt.timedelta(days=n)


def _time_of_day(text):
    m = re.fullmatch(r"(\d{1,2}):(\d{2})", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad origin {text!r}, expected HH:MM")
    return dt.timedelta(hours=int(m.group(1)), minutes=int(m.group(2)))


def _add_fit_flags(p, preset):
    p.add_argument("--preset", choices=sorted(PRESETS), default=preset,
                   help=f"default hyperparameters (default: {preset})")
    p.add_argument("--members", type=int, help="number of trees K")
    p.add_argument("--resample-ratio", type=float, help="bootstrap size relative to the data")
    p.add_argument("--t-crit", type=float, help="minimum impurity drop to keep splitting")
    p.add_argument("--min-partition", type=int, help="minimum observations per partition")
    p.add_argument("--max-iters", type=int, help="maximum number of splits per tree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-jobs", type=int, default=1, help="parallel member fitting")


def _ensemble_config(args):
    preset = PRESETS[args.preset]
    pick = {k: getattr(args, k) if getattr(args, k) is not None else v for k, v in preset.items()}
    return EnsembleConfig(
        k_members=pick["members"],
        resample_ratio=pick["resample_ratio"],
        seed=args.seed,
        tree_config=TreeConfig(min_partition_size=pick["min_partition"], t_crit=pick["t_crit"],
                               max_grow_iterations=pick["max_iters"]),
    )


def _config_record(config: EnsembleConfig):
    return {
        "members": config.k_members,
        "resample_ratio": config.resample_ratio,
        "seed": config.seed,
        "t_crit": config.tree_config.t_crit,
        "min_partition": config.tree_config.min_partition_size,
        "max_iters": config.tree_config.max_grow_iterations,
    }


def _write_manifest(path, record):
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(output):
    return output + ".run.json"


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_fit(args):
    data = load_training(args.train, covariates=args.covariates)
    config = _ensemble_config(args)
    model = fit_ensemble(data, config, n_jobs=args.n_jobs)
    save_model(model, args.output)
    _write_manifest(_manifest_path(args.output), {
        "command": "fit", "train": args.train, "output": args.output,
        "schema": list(model.covariate_schema), "n_rows": len(data),
        **_config_record(config),
    })
    log.info("fitted %d trees on %d rows -> %s", config.k_members, len(data), args.output)


def _predict_table(model, path):
    x, instants = load_covariates(path, model.covariate_schema)
    params = GevParams(*predict_arrays(model, x)) if len(x) else None
    return x, instants, params


def cmd_predict(args):
    model = load_model(args.model)
    x, instants, params = _predict_table(model, args.covariates)
    header, columns = [], []
    if instants is not None:
        header.append("instant")
        columns.append([format_instant(t) for t in instants])
    header += ["mu", "sigma", "xi"]
    if params is None:
        columns += [[], [], []]
    else:
        columns += [np.atleast_1d(a) for a in params.astuple()]
    for q in args.quantiles:
        header.append(f"q{q!r}")
        columns.append([] if params is None else np.atleast_1d(gev.inverse_cdf(q, params)))
    write_series(args.output, header, columns)
    _write_manifest(_manifest_path(args.output), {
        "command": "predict", "model": args.model, "covariates": args.covariates,
        "output": args.output, "quantiles": args.quantiles, "n_rows": int(len(x)),
    })


def cmd_risk(args):
    model = load_model(args.model)
    x, instants, params = _predict_table(model, args.covariates)
    if instants is None:
        raise SchemaMismatch(f"{args.covariates}: risk reports need an instant column")
    policy = RiskPolicy(args.lolp)
    if params is None:
        params = GevParams(np.empty(0), np.empty(0), np.empty(0))
    report = report_from_params(params, instants, policy, tz=args.tz,
                                hours_per_day=args.hours_per_day)
    out = _ensure_dir(args.out_dir)
    report.write_csv(os.path.join(out, "risk_report.csv"))
    report.write_summary(os.path.join(out, "risk_summary.json"))
    _write_manifest(os.path.join(out, "run_config.json"), {
        "command": "risk", "model": args.model, "covariates": args.covariates,
        "lolp": policy.daily_lolp, "alpha": policy.confidence, "tz": args.tz,
        "hours_per_day": args.hours_per_day,
    })
    log.info("annual EUE %.6g, capacity sum %.6g", report.annual_eue, report.annual_capacity_sum)


def cmd_synth(args):
    config = _ensemble_config(args)
    train_spec = SyntheticSpec(n=args.n, seed=args.seed)
    eval_seed = args.eval_seed if args.eval_seed is not None else args.seed + 1_000_003
    eval_spec = SyntheticSpec(n=args.n_eval or args.n, seed=eval_seed)
    data = generate(train_spec)
    start = time.perf_counter()
    model = fit_ensemble(data, config, n_jobs=args.n_jobs)
    log.info("fit took %.1f s", time.perf_counter() - start)
    result = evaluate(model, eval_spec, quantiles=args.quantiles)
    out = _ensure_dir(args.out_dir)
    result.write_csv(os.path.join(out, "synth_eval.csv"))
    result.write_scores(os.path.join(out, "synth_scores.json"),
                        extra={"train_mean_crps": mean_crps(model, data),
                               "crb_containment": result.crb_containment(args.n_effective)})
    if args.model_out:
        save_model(model, args.model_out)
    _write_manifest(os.path.join(out, "run_config.json"), {
        "command": "synth", "n": args.n, "eval_seed": eval_seed, "n_eval": eval_spec.n,
        "quantiles": args.quantiles, "n_effective": args.n_effective,
        **_config_record(config),
    })
    print(f"mean CRPS (fresh sample): {result.mean_crps:.6f}")


def cmd_blocks(args):
    series = load_observations(args.observations)
    spec = BlockSpec(block_length=args.block, origin=args.origin, mode=args.mode,
                     min_count=args.min_count)
    ext = extract_block_extrema(series, spec)
    for start, count in ext.dropped:
        print(f"dropped block {format_instant(start)}: {count} observation(s) "
              f"< {spec.min_count}", file=sys.stderr)
    write_series(args.output, ["block_start", "value", "count"],
                 [[format_instant(t) for t in ext.starts], ext.values,
                  [str(int(c)) for c in ext.counts]])
    _write_manifest(_manifest_path(args.output), {
        "command": "blocks", "observations": args.observations, "output": args.output,
        "block_seconds": int(spec.block_length.total_seconds()),
        "origin_seconds": int(spec.origin.total_seconds()), "mode": spec.mode,
        "min_count": spec.min_count, "dropped": len(ext.dropped),
    })


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gevtree",
        description="Conditional GEV densities of block extrema via bagged extreme trees.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an ensemble on a training CSV")
    p.add_argument("train")
    p.add_argument("-o", "--output", default="model.json")
    p.add_argument("--covariates", type=lambda s: s.split(","),
                   help="comma-separated covariate columns (default: all but block_start, peak)")
    _add_fit_flags(p, "case-study")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict GEV parameters and quantiles")
    p.add_argument("model")
    p.add_argument("covariates")
    p.add_argument("-o", "--output", default="params.csv")
    p.add_argument("--quantiles", type=_float_list, default=[])
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("risk", help="capacity requirement and expected unserved energy")
    p.add_argument("model")
    p.add_argument("covariates")
    p.add_argument("--out-dir", default="risk")
    p.add_argument("--lolp", type=float, default=nerc_daily_lolp(),
                   help="daily loss-of-load probability (default: 0.1/365)")
    p.add_argument("--tz", default="UTC", help="zone used to group hours into days")
    p.add_argument("--hours-per-day", type=int, default=24)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("synth", help="run the synthetic benchmark end to end")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--n-eval", type=int)
    p.add_argument("--eval-seed", type=int)
    p.add_argument("--quantiles", type=_float_list, default=list(LPHC_QUANTILES))
    p.add_argument("--n-effective", type=int, default=1000)
    p.add_argument("--out-dir", default="synth")
    p.add_argument("--model-out")
    _add_fit_flags(p, "benchmark")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("blocks", help="extract block maxima or minima from observations")
    p.add_argument("observations")
    p.add_argument("-o", "--output", default="extrema.csv")
    p.add_argument("--block", type=_duration, default=dt.timedelta(days=1),
                   help="daily, hourly, weekly, <N>h or <N>d")
    p.add_argument("--origin", type=_time_of_day, default=dt.timedelta(0),
                   help="block alignment as HH:MM past midnight UTC")
    p.add_argument("--mode", choices=["max", "min"], default="max")
    p.add_argument("--min-count", type=int, default=12)
    p.set_defaults(func=cmd_blocks)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (GevTreeError, FileNotFoundError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

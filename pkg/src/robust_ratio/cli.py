"""Command-line front end: ``robust-ratio {fit,sweep,converge,simulate,data}``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
Row indices on the command line are 1-based, as in the printed data tables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import datasets
from .densities import make_spec
from .errors import DatasetError, NumericalFailure, ParameterDomainError
from .model import ModelConfig, Prior
from .posterior import fit as fit_model
from .ratio import PopulationContext, population_mean_estimate, ratio_summary
from .robustness import convergence_trace, threshold_sweep
from .simstudy import FULL_SCALE_REPS, DEFAULT_SCENARIOS, StudyConfig, run_mse_study

MODEL_TOKENS = ("normal", "student", "lptn")
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _model_list(text: str) -> list:
    toks = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in toks if t not in MODEL_TOKENS]
    if bad or not toks:
        raise argparse.ArgumentTypeError(f"unknown model token(s) {bad}; choose from {MODEL_TOKENS}")
    return toks


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _outlier_list(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        idx, _, sign = item.partition(":")
        if sign not in ("+", "-"):
            raise argparse.ArgumentTypeError(f"outlier {item!r} must look like 11:+ or 11:-")
        try:
            out.append((int(idx), 1 if sign == "+" else -1))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad outlier index in {item!r}") from None
    return out


def _load(args):
    if args.data in datasets.DATASET_NAMES:
        return datasets.load_named(args.data, y11=args.y11)
    if not os.path.exists(args.data):
        raise UsageError(f"no such dataset or file: {args.data}")
    return datasets.read_csv(args.data)


def _zero_based(index: int, n: int) -> int:
    if not 1 <= index <= n:
        raise UsageError(f"row index {index} out of range 1..{n}")
    return index - 1


def _emit(text: str, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _config(token: str, args) -> ModelConfig:
    return ModelConfig(args.theta, make_spec(token), Prior(args.prior))


def cmd_fit(args):
    data = _load(args)
    config = _config(args.model, args)
    summary = fit_model(config, data, level=args.level, workers=args.threads)
    doc = summary.to_dict()
    doc["model"] = args.model
    doc["prior"] = args.prior
    doc["theta"] = args.theta
    if args.mu_x is not None:
        if args.theta != 0.5 or np.any(data.x <= 0):
            warnings.warn("ratio estimates assume theta = 0.5 and positive x", RuntimeWarning)
        point, interval = ratio_summary(summary, use_map=args.map_point)
        mpoint, minterval = population_mean_estimate(summary, PopulationContext(args.mu_x),
                                                     use_map=args.map_point)
        doc["ratio"] = {"point": point, "interval": list(interval)}
        doc["population_mean"] = {"point": mpoint, "interval": list(minterval), "mu_x": args.mu_x}
    _emit(json.dumps(doc, indent=2) + "\n", args.output)


def cmd_sweep(args):
    data = _load(args)
    index = _zero_based(args.index, data.n)
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    values = np.linspace(args.start, args.stop, args.steps) if args.steps > 1 else np.array([args.start])
    configs = [_config(t, args) for t in args.models]
    result = threshold_sweep(configs, data, index, values, workers=args.threads,
                             serial=True if args.serial else None)
    _emit(result.to_csv(), args.output)


def cmd_converge(args):
    data = _load(args)
    indices = [_zero_based(i, data.n) for i, _ in args.outliers]
    directions = [d for _, d in args.outliers]
    trace = convergence_trace(_config(args.model, args), data, indices, directions, args.omegas,
                              workers=args.threads)
    _emit(trace.to_csv(), args.output)


def cmd_simulate(args):
    if args.scenarios != "paper3":
        raise UsageError("only the 'paper3' scenario set is built in")
    reps = FULL_SCALE_REPS if args.full_scale else args.reps
    models = tuple(ModelConfig(0.5, make_spec(t), Prior.FLAT) for t in args.models)
    cfg = StudyConfig(reps=reps, seed=args.seed, models=models)
    table = run_mse_study(cfg, DEFAULT_SCENARIOS, workers=args.threads)
    _emit(table.to_csv(), args.output)


def cmd_data(args):
    _emit(datasets.to_csv(datasets.load_named(args.name, y11=args.y11)), args.output)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robust-ratio",
                                description="Robust Bayesian regression through the origin.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data_default=None, prior_default="flat"):
        sp.add_argument("--data", default=data_default, required=data_default is None,
                        help="table1, table2 or a CSV path with header x,y")
        sp.add_argument("--y11", type=float, default=85.0, help="free response of table1 (default 85)")
        sp.add_argument("--theta", type=float, default=0.5)
        sp.add_argument("--prior", choices=[p.value for p in Prior], default=prior_default)
        sp.add_argument("--output", "-o", default=None)
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    f = sub.add_parser("fit", help="MAP, posterior medians and HPD intervals as JSON")
    common(f, prior_default="inv-sigma")
    f.add_argument("--model", choices=MODEL_TOKENS, default="lptn")
    f.add_argument("--mu-x", type=float, default=None, help="known population mean of x")
    f.add_argument("--level", type=float, default=0.95)
    f.add_argument("--map-point", action="store_true", help="use the MAP slope as ratio point")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", help="MAP estimates while one response moves")
    common(s, data_default="table1")
    s.add_argument("--index", type=int, default=11, help="1-based row to move")
    s.add_argument("--from", dest="start", type=float, default=85.0)
    s.add_argument("--to", dest="stop", type=float, default=385.0)
    s.add_argument("--steps", type=int, default=301)
    s.add_argument("--models", type=_model_list, default=list(MODEL_TOKENS))
    s.add_argument("--serial", action="store_true", help="chain warm starts across points")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("converge", help="L1 and marginal-ratio trace as outliers grow")
    common(c, data_default="table1")
    c.add_argument("--outliers", type=_outlier_list, default=[(11, 1)],
                   help="comma-separated i:+ or i:- (1-based)")
    c.add_argument("--omegas", type=_float_list, default=[1e2, 1e3, 1e4, 1e5, 1e6])
    c.add_argument("--model", choices=MODEL_TOKENS, default="lptn")
    c.set_defaults(func=cmd_converge)

    m = sub.add_parser("simulate", help="Monte Carlo MSE table")
    m.add_argument("--reps", type=int, default=2000)
    m.add_argument("--seed", type=int, default=StudyConfig.seed)
    m.add_argument("--scenarios", default="paper3")
    m.add_argument("--models", type=_model_list, default=list(MODEL_TOKENS))
    m.add_argument("--full-scale", action="store_true", help=f"{FULL_SCALE_REPS} replicates")
    m.add_argument("--output", "-o", default=None)
    m.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    m.set_defaults(func=cmd_simulate)

    d = sub.add_parser("data", help="print an embedded dataset as CSV")
    d.add_argument("--name", required=True, choices=datasets.DATASET_NAMES)
    d.add_argument("--y11", type=float, default=85.0)
    d.add_argument("--output", "-o", default=None)
    d.set_defaults(func=cmd_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            parser.error("--threads must be positive")
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return exc.code
    try:
        args.func(args)
    except (UsageError, DatasetError, ParameterDomainError) as exc:
        print(f"robust-ratio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"robust-ratio: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())

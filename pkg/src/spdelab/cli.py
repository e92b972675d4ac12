"""Command line entry point: ``spdelab run | models | constants``."""

from __future__ import annotations

import argparse
import csv
import sys
import warnings

from spdelab.analysis import CorrectionQuery, correction_constant
from spdelab.config import EXPERIMENTS, SCHEMA, ConfigError, parse_config, parse_value
from spdelab.experiments import CSV_SCHEMAS, run_experiment
from spdelab.grid import format_float
from spdelab.models import MODEL_DESCRIPTIONS


def _schemas_help() -> str:
    lines = ["output files (CSV columns):"]
    lines += [f"  {name:34s} {cols}" for name, cols in CSV_SCHEMAS.items()]
    lines += ["", "config keys:"]
    lines += [f"  {key:24s} {desc}" for key, (_, desc) in SCHEMA.items()]
    return "\n".join(lines)


def _key_value(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), parse_value(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spdelab", description="Stencil-artifact experiments for stochastic Burgers-type equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment", epilog=_schemas_help(),
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("experiment_id", choices=EXPERIMENTS)
    run.add_argument("--config", required=True, help="flat key = value config file")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--set", dest="overrides", action="append", type=_key_value, default=[],
                     metavar="KEY=VALUE", help="override one config key; repeatable")

    sub.add_parser("models", help="list the built-in models")

    const = sub.add_parser("constants", help="print the four correction constants as CSV")
    const.add_argument("--sigma", type=float, default=1.0)
    const.add_argument("--nu", type=float, default=1.0)
    const.add_argument("--a", type=float, default=1.0)
    const.add_argument("--b", type=float, default=0.0)
    const.add_argument("--c", type=float, default=1.0)
    const.add_argument("--N", type=int, default=64)
    return parser


def _run(args) -> int:
    overrides = dict(args.overrides)
    overrides["experiment_id"] = args.experiment_id
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output.dir"] = args.out
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read(), overrides)
    except (OSError, ConfigError) as exc:
        print(f"spdelab: {exc}", file=sys.stderr)
        return 2
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        manifest, result = run_experiment(cfg)
    print(f"wrote {len(manifest.outputs)} files to {cfg['output.dir']}")
    for name in manifest.outputs:
        print(f"  {name}")
    return 0


def _models() -> int:
    for name, desc in MODEL_DESCRIPTIONS.items():
        print(f"{name:22s} {desc}")
    return 0


def _constants(args) -> int:
    common = dict(sigma=args.sigma, nu=args.nu)
    queries = [
        CorrectionQuery("continuum_two_point", a=args.a, b=args.b, **common),
        CorrectionQuery("general_stencil", c=args.c, **common),
        CorrectionQuery("fd_discrete", N=args.N, **common),
        CorrectionQuery("galerkin_discrete", N=args.N, **common),
    ]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["kind", "sigma", "nu", "a", "b", "c", "N", "value"])
    for q in queries:
        writer.writerow([q.kind, format_float(q.sigma), format_float(q.nu), format_float(q.a),
                         format_float(q.b), format_float(q.c), q.N,
                         format_float(correction_constant(q))])
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "models":
            return _models()
        return _constants(args)
    except ValueError as exc:
        print(f"spdelab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

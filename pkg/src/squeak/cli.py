"""Command line entry point.

    squeak run --dataset gaussian:n=512,dim=1 --gamma 1 --mu 2 --seeds 0-9 --out runs/g1.jsonl
    squeak generate blocks:n=1024,blocks=3 data.csv

Exit codes: 0 success, 2 configuration error, 3 verification failure (``--strict``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .exceptions import ConfigError
from .harness import SAMPLERS, ExperimentConfig, generate_synthetic, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3


def _int_list(text: str) -> list:
    out = []
    for part in filter(None, text.split(",")):
        lo, sep, hi = part.partition("-")
        if sep:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squeak", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment and write a JSON-lines report")
    run.add_argument("--config", type=Path, help="YAML/JSON file with the same keys as the flags")
    run.add_argument("--dataset", help="CSV path or synthetic spec (gaussian:n=..,dim=.. | blocks:n=..)")
    run.add_argument("--kernel", help="gaussian:bandwidth=.. | linear | polynomial:degree=..,offset=..")
    run.add_argument("--gamma", type=float)
    run.add_argument("--mu", type=float)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--qbar-const", type=float)
    run.add_argument("--sampler", choices=SAMPLERS)
    run.add_argument("--seeds", type=_int_list, help="e.g. 0-9 or 1,5,7")
    run.add_argument("--checkpoints", type=_int_list, help="steps to verify (default 16,32,..,n)")
    run.add_argument("--out", help="JSON-lines output; a summary CSV is written alongside")
    run.add_argument("--verify-cap", type=int, help="largest t for dense verification (default 2000)")
    run.add_argument("--workers", type=int)
    run.add_argument("--resume", action="store_true", default=None,
                     help="skip (seed, checkpoint) pairs already present in --out")
    run.add_argument("--strict", action="store_true", help="exit 3 if any gamma check fails")
    run.add_argument("-v", "--verbose", action="store_true")

    gen = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    gen.add_argument("spec")
    gen.add_argument("path", type=Path)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            data = yaml.safe_load(args.config.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        for key in ("seeds", "checkpoints"):
            if isinstance(data.get(key), str):
                data[key] = _int_list(data[key])
    flags = ("dataset", "kernel", "gamma", "mu", "epsilon", "delta", "qbar_const", "sampler",
             "seeds", "checkpoints", "out", "verify_cap", "workers", "resume")
    for name in flags:
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    try:
        return ExperimentConfig.from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        try:
            generate_synthetic(args.spec).to_csv(args.path)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        report = run_experiment(_config_from_args(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    failed = [r for r in report.records if not r["gamma_holds"]]
    print(f"{len(report.records)} records, {len(failed)} gamma-check failures")
    if args.strict and failed:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

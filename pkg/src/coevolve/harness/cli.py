"""Run scenarios, exponent sweeps and config checks from the command line.

    coevolve run <scenario> [--config FILE] [--mode MODE] [--seed N ...] [--out DIR]
    coevolve sweep exponent --A 1.1,1.15 --dT 0.005,0.01 [--seed N ...]
    coevolve validate --config FILE

The output directory defaults to $COEVOLVE_OUTPUT_DIR, else ./coevolve-output.
"""

from __future__ import annotations

import argparse
import sys

from ..exceptions import CoevolveError, ConfigurationError
from .config import MODES, SCENARIOS, build_config, parse_config_text, validate_config
from .output import OUTPUT_ENV, output_dir
from .scenarios import run_scenario


def _float_list(text: str) -> tuple:
    try:
        values = tuple(float(p) for p in text.replace(",", " ").split())
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {err}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _assignment(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    return key, value


def _overrides(pairs) -> dict:
    if not pairs:
        return {}
    text = "\n".join(f"{k} = {v}" for k, v in pairs)
    return parse_config_text(text, "--set")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coevolve", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write CSV files")
    run.add_argument("scenario", choices=[s for s in SCENARIOS if s != "exponent_sweep"])
    run.add_argument("--config", help="key = value file overriding the preset")
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--seed", type=int, nargs="+", help="one or more seeds")
    run.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./coevolve-output)")
    run.add_argument("--set", type=_assignment, action="append", metavar="KEY=VALUE",
                     help="override a single config key; may repeat")

    sweep = sub.add_parser("sweep", help="parameter sweeps")
    sweep.add_argument("what", choices=["exponent"])
    sweep.add_argument("--A", type=_float_list, required=True, help="stretch factors, e.g. 1.1,1.15")
    sweep.add_argument("--dT", type=_float_list, required=True, help="burst lengths, e.g. 0.005,0.01")
    sweep.add_argument("--config")
    sweep.add_argument("--seed", type=int, nargs="+")
    sweep.add_argument("--out")
    sweep.add_argument("--set", type=_assignment, action="append", metavar="KEY=VALUE")

    validate = sub.add_parser("validate", help="check a config file; exit 1 on problems")
    validate.add_argument("--config", required=True)
    validate.add_argument("--scenario", choices=SCENARIOS)
    return parser


def _print_outputs(result):
    for name, path in result.paths.items():
        print(f"{name}: {path}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            try:
                cfg = build_config(args.scenario, args.config)
            except (ConfigurationError, OSError) as err:
                print(f"error: {err}", file=sys.stderr)
                return 1
            problems = validate_config(cfg)
            for p in problems:
                print(f"error: {p}", file=sys.stderr)
            if problems:
                return 1
            print(f"{args.config}: ok ({cfg.scenario}, mode {cfg.mode})")
            return 0

        extra = _overrides(args.set)
        if args.seed:
            extra["seeds"] = tuple(args.seed)
        if args.command == "run":
            if args.mode:
                extra["mode"] = args.mode
            cfg = build_config(args.scenario, args.config, **extra)
        else:
            extra.update(A_list=args.A, dT_list=args.dT)
            cfg = build_config("exponent_sweep", args.config, **extra)
        result = run_scenario(cfg, output_dir(args.out or cfg.out or None))
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except (CoevolveError, ValueError) as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 3
    _print_outputs(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())

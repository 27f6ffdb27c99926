"""Command-line front end.

Subcommands run one scenario each from an optional YAML config; `report`
renders figures from a directory of previously emitted CSVs.

Exit codes: 0 success, 2 configuration error, 3 numeric/convergence error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .errors import ConfigValidationError, NumericError, StepResolutionError, TailBoundError
from .scenarios import SCENARIOS, run_scenario, validate_config

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wallflux",
        description="Confined-wave survival toolkit: absorbing-wall decay scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", type=Path, default=None,
                        help="YAML config file (defaults are built in)")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (overrides output.dir)")
        sp.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted config override, e.g. numeric.dt=1e-5")
        sp.add_argument("--stepper", choices=["spectral", "cn", "feynman"],
                        default=None, help="time stepper to use")
    rp = sub.add_parser("report", help="render figures from emitted CSVs")
    rp.add_argument("--out", type=Path, required=True,
                    help="directory holding scenario CSV outputs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "report":
        from .reporting import render_directory

        written = render_directory(args.out)
        if not written:
            print(f"no scenario CSVs found in {args.out}", file=sys.stderr)
            return EXIT_CONFIG
        for path in written:
            print(f"wrote {path}")
        return 0

    raw = {}
    if args.config is not None:
        try:
            raw = yaml.safe_load(args.config.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    raw.setdefault("scenario", args.command)
    overrides = list(args.override)
    if args.stepper:
        overrides.append(f"numeric.stepper={args.stepper}")
    if args.out is not None:
        overrides.append(f"output.dir={args.out}")

    try:
        config = validate_config(raw, overrides=overrides)
        if config.scenario != args.command:
            raise ConfigValidationError(
                [f"config names scenario {config.scenario!r} but the "
                 f"{args.command!r} subcommand was invoked"])
        summary = run_scenario(config)
    except ConfigValidationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (TailBoundError, StepResolutionError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    print(json.dumps(summary.to_dict()["headline"], indent=2, sort_keys=True))
    for path in summary.files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

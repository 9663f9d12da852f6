"""Command-line front end.

Subcommands: ``suite`` runs a full verification configuration and writes a
report; ``cmi`` / ``ucmi`` / ``ecmi`` / ``gap`` / ``auroc`` run one
computation for a single-experiment config; ``bound`` evaluates a bound
formula directly from parameters.

Exit codes: 0 success and every checked inequality satisfied; 2 config or
component-resolution error; 3 exact mode infeasible at the requested size;
4 at least one inequality unsatisfied.
"""

from __future__ import annotations

import argparse
import json
import sys

from .algkernel import ExactEnumerationError
from .bounds import (
    bound_agnostic,
    bound_auroc,
    bound_nonlinear,
    bound_nonlinear_expectation,
    bound_normalized,
    bound_realizable,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    bundled_suite_path,
    emit,
    load_config,
    run_suite,
    single_auroc,
    single_cmi,
    single_ecmi,
    single_gap,
    single_ucmi,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_UNSATISFIED = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default=None, help="output file (default: stdout)")
    parser.add_argument("--format", default="csv", choices=("csv", "json"))
    parser.add_argument("--seed-override", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmi-lab",
        description="Information diagnostics and generalization-bound checks "
        "for learning algorithms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    suite = sub.add_parser("suite", help="run a full verification suite")
    _add_common(suite)

    for name, help_text in (
        ("cmi", "selection information of one experiment"),
        ("ucmi", "worst-selector-law information on sampled candidates"),
        ("ecmi", "loss-evaluated information on sampled candidates"),
        ("gap", "Monte-Carlo generalization gap of one experiment"),
        ("auroc", "ranking-quality generalization check"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_common(cmd)
        if name in ("ucmi", "ecmi"):
            cmd.add_argument("--candidates", type=int, default=8)

    bound = sub.add_parser("bound", help="evaluate one bound formula")
    bound.add_argument("--config", required=True, help="JSON with {family, params}")
    bound.add_argument("--out", default=None)

    sub.add_parser("suite-path", help="print the bundled reference suite path")
    return parser


def _single_config(path: str) -> ExperimentConfig:
    _, configs = load_config(path)
    if len(configs) != 1:
        raise ConfigError(f"expected exactly one experiment, found {len(configs)}")
    return configs[0]


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


_BOUND_FAMILIES = {
    "agnostic": lambda p: bound_agnostic(p["kind"], p["cmi"], p["n"], p.get("scale", 1.0)),
    "realizable": lambda p: bound_realizable(p.get("empirical_mean", 0.0), p["cmi"], p["n"]),
    "nonlinear": lambda p: bound_nonlinear(p["lam"], p["u"], p["cmi"], p.get("tail_prob", 0.0)),
    "nonlinear-expectation": lambda p: bound_nonlinear_expectation(p["cmi"], p["e_delta_sq"]),
    "auroc": lambda p: bound_auroc(
        p["epsilon"], p["p"], p["n"], p["cmi"], p.get("form", "absorbed")
    ),
    "normalized": lambda p: bound_normalized(p["epsilon"], p["cmi"], p["n"], p["e_delta_sq"]),
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            report = run_suite(
                args.config, seed_override=args.seed_override, jobs=args.jobs
            )
            text = emit(report, args.format, args.out)
            if args.out is not None:
                sys.stdout.write(f"report written to {args.out}\n")
            else:
                sys.stdout.write(text)
            return EXIT_OK if report.all_satisfied else EXIT_UNSATISFIED
        if args.command == "suite-path":
            sys.stdout.write(bundled_suite_path() + "\n")
            return EXIT_OK
        if args.command == "bound":
            with open(args.config) as fh:
                spec = json.load(fh)
            family = spec.get("family")
            if family not in _BOUND_FAMILIES:
                raise ConfigError(f"unknown bound family {family!r}")
            value = _BOUND_FAMILIES[family](spec.get("params", {}))
            _write(json.dumps({"family": family, "value": value}) + "\n", args.out)
            return EXIT_OK

        config = _single_config(args.config)
        if args.command == "cmi":
            payload = single_cmi(config, args.seed_override)
        elif args.command == "ucmi":
            payload = single_ucmi(config, args.seed_override, candidates=args.candidates)
        elif args.command == "ecmi":
            payload = single_ecmi(config, args.seed_override, candidates=args.candidates)
        elif args.command == "gap":
            payload = single_gap(config, args.seed_override)
        elif args.command == "auroc":
            payload = single_auroc(config, args.seed_override)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command!r}")
        _write(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    except ExactEnumerationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFEASIBLE
    except (ConfigError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())

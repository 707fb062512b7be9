"""Command line front-end.

Exit codes: 0 success, 2 config error, 3 numerical-tolerance violation,
4 I/O error.
"""

import argparse
import json
import logging
import os
import sys

from .correlations import correlation_report
from .linalg import ToleranceError
from .scenarios import (
    ConfigError,
    classicality_report,
    config_from_dict,
    emit,
    format_csv,
    load_config,
    run_scenario,
    steady_report,
)

log = logging.getLogger("kcdiss")

FIGURES = ("fig1", "fig2", "fig4", "fig5a", "fig5b", "fig6", "fig6d")


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON file of flat key/value pairs")
    parser.add_argument("--out", default=default, help="output path (stdout if omitted)")
    parser.add_argument("--force", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="overwrite an existing output file")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1)
    parser.add_argument("--seed", type=int, default=default,
                        help="reserved; all algorithms are deterministic")


def build_parser():
    parser = argparse.ArgumentParser(prog="kcdiss", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    sub.add_parser("simulate", parents=[common], help="trajectory and correlations as CSV")
    sub.add_parser("steady", parents=[common], help="null-space report as JSON")
    sub.add_parser("classicality", parents=[common], help="closure report as JSON")
    scan = sub.add_parser("scan", parents=[common], help="separable maximum or asymmetry law")
    scan.add_argument("kind", choices=("separable_max", "asymmetry"))
    fig = sub.add_parser("figure", parents=[common], help="figure reproduction CSV")
    fig.add_argument("name", choices=FIGURES)
    sub.add_parser("correlations", parents=[common], help="single-state correlation report")
    return parser


def _config(args, scenario):
    if args.config:
        return load_config(args.config, scenario)
    return config_from_dict({}, scenario)


def _write_text(text, args):
    if args.out:
        if os.path.exists(args.out) and not args.force:
            raise FileExistsError(f"{args.out}: refusing to overwrite (use --force)")
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_out(table, summary, args):
    if args.out:
        emit(table, args.out, force=args.force)
        if summary:
            sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(format_csv(table))


def run(args):
    cmd = args.command
    if cmd == "simulate":
        table, summary = run_scenario(_config(args, "custom"), threads=args.threads)
        _table_out(table, summary, args)
    elif cmd == "figure":
        table, summary = run_scenario(_config(args, args.name), threads=args.threads)
        _table_out(table, summary, args)
    elif cmd == "scan":
        name = "separable_max" if args.kind == "separable_max" else "asymmetry_scan"
        table, summary = run_scenario(_config(args, name), threads=args.threads)
        _table_out(table, summary, args)
    elif cmd == "steady":
        _write_text(json.dumps(steady_report(_config(args, "custom")), indent=2) + "\n", args)
    elif cmd == "classicality":
        _write_text(json.dumps(classicality_report(_config(args, "custom")), indent=2) + "\n", args)
    elif cmd == "correlations":
        rho = _config(args, "custom").initial()
        _write_text(json.dumps(correlation_report(rho).as_dict(), indent=2) + "\n", args)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        run(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except ToleranceError as exc:
        log.error("numerical tolerance violated: %s", exc)
        return 3
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

One subcommand per experiment kind. A JSON config file supplies parameters;
the common flags override its top-level fields. Exit status: 0 on success,
1 on configuration or validation errors, 2 when `verify` finds any failing
acceptance criterion (expected, documented failures included).
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ValidationError
from .harness import KINDS, build_config, emit, run_experiment, summary_document


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for
    # acceptance failures here, so route usage errors through exit 1
    def error(self, message):
        raise _CliError(message)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--samples", type=int, help="sample/path/trial count (overrides config)")
    p.add_argument("--out", metavar="PATH", help="output file; omit to print a summary")
    p.add_argument("--format", dest="fmt", help='"csv" or "json"')
    p.add_argument("--threads", type=int, help="worker threads for ensemble chunks")


def _build_parser() -> _Parser:
    parser = _Parser(prog="timearrow", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="|".join(KINDS))
    for kind in KINDS:
        p = sub.add_parser(kind, add_help=True)
        _add_common_flags(p)
        if kind == "verify":
            p.add_argument(
                "--criteria", metavar="LIST",
                help="comma-separated criterion ids to run (default: all)",
            )
    return parser


def _merge_raw(args) -> dict:
    if args.config is not None:
        with open(args.config) as fh:
            text = fh.read()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"config parse error at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    else:
        raw = {}
    declared = raw.get("experiment")
    if declared is not None and declared != args.command:
        raise ConfigError(
            f"config declares experiment {declared!r} but the "
            f"{args.command!r} subcommand was invoked",
            key="experiment",
        )
    raw["experiment"] = args.command
    for key, value in (
        ("seed", args.seed),
        ("samples", args.samples),
        ("out", args.out),
        ("format", args.fmt),
        ("threads", args.threads),
    ):
        if value is not None:
            raw[key] = value
    if getattr(args, "criteria", None) is not None:
        params = raw.setdefault("params", {})
        if isinstance(params, dict):
            params["criteria"] = [c.strip() for c in args.criteria.split(",") if c.strip()]
    return raw


def _print_verify(record) -> None:
    for row in record.rows:
        print(
            f"[{row['criterion']:>2}] {row['status']:<34} {row['name']}: "
            f"{row['detail']} ({row['runtime_seconds']:.2f}s)"
        )
    s = record.summary
    print(
        f"criteria passed: {s['passed']}/{s['total']} "
        f"(failed: {s['failed']}, expected failures: {s['expected_failures']})"
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        raw = _merge_raw(args)
        config = build_config(raw)
        record = run_experiment(config)
        if config.out is not None:
            for path in emit(record, config.fmt, config.out):
                print(path)
        if config.kind == "verify":
            _print_verify(record)
        elif config.out is None:
            print(json.dumps(summary_document(record), indent=2, sort_keys=True))
    except (ConfigError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if config.kind == "verify" and not record.summary["all_passed"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

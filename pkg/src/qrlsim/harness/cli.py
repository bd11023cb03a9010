"""Command line: ``qrlsim {run,enumerate,budget,selftest}``.

Exit codes: 0 success, 1 failed self-test, 2 configuration error,
3 numerical invariant violation, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, InvariantViolation, StateError
from ..noise import budget
from ..protocol import build_protocol
from .config import parse_config
from .report import emit_report
from .runner import enumerate_config, execute

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3, 4

_SHORTCUTS = ("variant", "shots", "cycles", "seed", "mode", "output", "format")


def _add_config_args(p: argparse.ArgumentParser, variant_default: str | None = None) -> None:
    p.add_argument("-c", "--config", type=Path, help="key=value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--variant", default=variant_default)
    p.add_argument("--shots", help="independent sessions (run)")
    p.add_argument("--cycles", help="cycles per session")
    p.add_argument("--seed", help="master seed")
    p.add_argument("--mode", choices=("ideal", "noisy", "enumerate"))
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrlsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_args(sub.add_parser("run", help="sample sessions and write per-cycle rows"))
    _add_config_args(sub.add_parser("enumerate", help="write every measurement branch of one cycle"))
    _add_config_args(sub.add_parser("budget", help="print the timing and error budget"), "mq-partial")
    sub.add_parser("selftest", help="run the acceptance checks")
    return parser


def load_config(args: argparse.Namespace, **forced):
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key in _SHORTCUTS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    overrides.update(forced)
    return parse_config(text, overrides)


def _print_budget(cfg) -> None:
    rep = budget(cfg.hardware, build_protocol(cfg.variant), cfg.noise)
    print(f"variant={cfg.variant.value}")
    print(rep.summary())
    for k in sorted({1, 4, cfg.cycles}):
        print(f"fidelity_after({k})={rep.fidelity_after(k):.4f}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            from ..acceptance import run_all

            results = run_all()
            return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST
        if args.command == "budget":
            _print_budget(load_config(args))
            return EXIT_OK
        if args.command == "enumerate":
            cfg = load_config(args, mode="enumerate")
            report = enumerate_config(cfg)[1]
        else:
            cfg = load_config(args)
            report = execute(cfg)
        text = emit_report(report, cfg.format, cfg.output)
        if cfg.output is None:
            sys.stdout.write(text)
        return EXIT_OK
    except (ConfigError, StateError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``ambersets {build,generate,retrieve,evaluate,report,all}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import ConfigError, ParseError, RunValidationError
from .report import FORMATS

logger = logging.getLogger("ambersets")

COMMANDS = ("build", "generate", "retrieve", "evaluate", "report", "all")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ambersets", description="Build and evaluate AmbER sets.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="pipeline TOML config")
        p.add_argument("--outdir", type=Path, help="override paths.outdir")
        if name in ("retrieve", "evaluate", "all"):
            p.add_argument("--k", type=int, help="ranking depth / second accuracy cutoff (default 20)")
        if name in ("evaluate", "all"):
            p.add_argument("--run", action="append", type=Path, default=[],
                           help="external run file (repeatable)")
            p.add_argument("--strict", action="store_true", default=None,
                           help="fail when a run lacks a ranking for some query")
        if name in ("report", "all"):
            p.add_argument("--format", default="table", help=f"one of {', '.join(FORMATS)}")
    return parser


def run_command(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        overrides = {
            "outdir": args.outdir,
            "k": getattr(args, "k", None),
            "strict": getattr(args, "strict", None),
        }
        cfg = pipeline.load_config(args.config, overrides)
        runs = getattr(args, "run", [])
        for r in runs:
            if not r.exists():
                raise ConfigError(f"missing run path: {r}")
        fmt = getattr(args, "format", "table")
        if fmt not in FORMATS:
            raise ConfigError(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")

        if args.command == "build":
            pipeline.build(cfg)
        elif args.command == "generate":
            pipeline.generate(cfg)
        elif args.command == "retrieve":
            pipeline.retrieve(cfg)
        elif args.command == "evaluate":
            pipeline.evaluate(cfg, runs)
        elif args.command == "report":
            sys.stdout.write(pipeline.report(cfg, fmt))
        else:
            pipeline.build(cfg)
            pipeline.generate(cfg)
            pipeline.retrieve(cfg)
            pipeline.evaluate(cfg, runs)
            sys.stdout.write(pipeline.report(cfg, fmt))
    except (ConfigError, OSError) as exc:
        logger.error("%s", exc)
        return 2
    except (RunValidationError, ParseError) as exc:
        logger.error("%s", exc)
        return 1
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()

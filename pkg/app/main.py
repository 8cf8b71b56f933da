"""
DRC Hotspot Predictor

Command-line entry point: `python -m app.main <command> [flags]`.
"""

import argparse
import sys
from typing import Optional, Sequence

from app import __version__
from app.cli.commands import COMMANDS
from app.core.logs import configure_logging
from app.errors import DrcNetError, UsageError


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> CliParser:
    parser = CliParser(
        prog="drcnet",
        description="DRC hotspot prediction with NN ensembles (PCA, subset selection, soft voting)",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliParser)
    subparsers.required = True
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 1 on usage errors, 2 on validation / data errors,
        3 when a required metric is undefined
    """
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        return args.handler(args)
    except DrcNetError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

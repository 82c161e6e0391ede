import argparse
import logging
import sys
from typing import Optional, Sequence

from . import config
from .commands import converge, odecheck, run
from .exceptions import EXIT_OK, WillmoreException

logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="willmore",
        description="p-adaptive LDG solver for level set Willmore flow",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register commands
    run.register(subparsers)
    converge.register(subparsers)
    odecheck.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map failures to exit codes"""
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except WillmoreException as e:
        logging.error(f"{type(e).__name__}: {e.detail}")
        return e.status_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

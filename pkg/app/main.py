"""driftcomp: two-species competition with drift and p-Laplacian dispersal.

Run ``python -m app.main --help`` for the subcommands.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from app.commands import COMMANDS
from app.config import settings
from app.models.errors import SimulationError

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftcomp",
        description="Method-of-lines simulator for Lotka-Volterra competition with drift",
    )
    parser.add_argument("--log-level", default=settings.log_level,
                        help="logging level (default from LOG_LEVEL, else INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except SimulationError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        logger.exception("%s failed", args.command)
        return 1


if __name__ == "__main__":
    sys.exit(main())

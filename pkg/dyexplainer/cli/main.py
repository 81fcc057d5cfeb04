"""
DyExplainer - Command-Line Entry Point

Parses the command line, configures logging and runs one subcommand, turning
any raised exception into a single-line error report and an exit code.
"""

import sys
from collections.abc import Sequence

from dyexplainer.cli.router import build_parser
from dyexplainer.config import settings
from dyexplainer.core.handlers import run_guarded
from dyexplainer.core.logging import get_logger, setup_logging

logger = get_logger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    # overrides placed after options arrive as extras
    unknown = [arg for arg in extras if arg.startswith("-") or "=" not in arg]
    if unknown:
        parser.error(f"unrecognized arguments: {' '.join(unknown)}")
    args.overrides = [*args.overrides, *extras]
    setup_logging(args.log_level)
    logger.debug(f"{settings.PROJECT_NAME} {args.command} ({settings.ENV})")
    return run_guarded(lambda: args.handler(args))


if __name__ == "__main__":
    sys.exit(main())

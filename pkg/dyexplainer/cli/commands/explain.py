"""
Explain Command

Exports structural and temporal attention of a checkpoint's buffer as CSV.
"""

import argparse

from dyexplainer.cli.deps import (
    add_checkpoint_argument,
    add_common_arguments,
    emit,
    get_run_service,
)

NAME = "explain"


def handle(args: argparse.Namespace) -> int:
    paths = get_run_service(args).explain(args.checkpoint)
    emit({"outputs": [str(path) for path in paths]})
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="write attention CSVs for a checkpoint")
    add_common_arguments(parser)
    add_checkpoint_argument(parser)
    parser.set_defaults(handler=handle)

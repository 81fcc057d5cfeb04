"""
Eval Command

Scores a checkpoint's link prediction on the snapshot after its buffer.
"""

import argparse

from dyexplainer.cli.deps import (
    add_checkpoint_argument,
    add_common_arguments,
    emit,
    get_run_service,
)

NAME = "eval"


def handle(args: argparse.Namespace) -> int:
    emit(get_run_service(args).evaluate(args.checkpoint))
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="MRR report for a trained checkpoint")
    add_common_arguments(parser)
    add_checkpoint_argument(parser)
    parser.set_defaults(handler=handle)

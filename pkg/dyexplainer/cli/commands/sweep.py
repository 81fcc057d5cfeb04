"""
Sweep Command

Fidelity against sparsity over `evaluation.sparsity_grid`, scoring either the
model's structural attention or an external importance file.
"""

import argparse

from dyexplainer.cli.deps import (
    add_checkpoint_argument,
    add_common_arguments,
    emit,
    get_run_service,
)

NAME = "sweep"


def handle(args: argparse.Namespace) -> int:
    emit(get_run_service(args).sweep(args.checkpoint))
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="fidelity/sparsity CSV for a checkpoint")
    add_common_arguments(parser)
    add_checkpoint_argument(parser)
    parser.set_defaults(handler=handle)

"""
Train Command

Runs live-update training and reports the headline MRR next to the
published value for the dataset, when there is one.
"""

import argparse

from dyexplainer.cli.deps import add_common_arguments, emit, get_run_service

NAME = "train"


def handle(args: argparse.Namespace) -> int:
    emit(get_run_service(args).train())
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        NAME, help="live-update training; writes checkpoint.dyx and metrics.jsonl"
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)

"""
Ingest Command

Buckets an edge stream into snapshots and reports their summary.
"""

import argparse

from dyexplainer.cli.deps import add_common_arguments, emit, get_run_service

NAME = "ingest"


def handle(args: argparse.Namespace) -> int:
    summary = get_run_service(args).ingest()
    emit(summary)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="bucket an edge stream and write snapshots.json")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)

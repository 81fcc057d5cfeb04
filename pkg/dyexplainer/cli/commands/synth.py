"""
Synth Command

Writes a planted dataset, its ground truth and a config ready for `train`.
"""

import argparse

from dyexplainer.cli.deps import add_common_arguments, emit, get_run_service

NAME = "synth"


def handle(args: argparse.Namespace) -> int:
    truth = get_run_service(args).synth()
    emit({"lag": truth.lag, "snapshots": len(truth.signal_edges), "motif": len(truth.motif)})
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="generate a planted dataset with ground truth")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)

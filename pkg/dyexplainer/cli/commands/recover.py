"""
Recover Command

Trains on planted data for several seeds and reports how well the
explanations recover the planted edges and lag.
"""

import argparse

from dyexplainer.cli.deps import add_common_arguments, emit, get_run_service

NAME = "recover"


def handle(args: argparse.Namespace) -> int:
    service = get_run_service(args)
    first = service.config.seed
    seeds = args.seeds or list(range(first, first + args.num_seeds))
    emit(service.recover(seeds))
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(NAME, help="explanation recovery on planted data")
    add_common_arguments(parser)
    parser.add_argument("--num-seeds", type=int, default=10, help="seeds from the config seed on")
    parser.add_argument("--seeds", type=int, nargs="+", help="explicit seed list")
    parser.set_defaults(handler=handle)

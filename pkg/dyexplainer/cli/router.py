"""
CLI Router

Aggregates all subcommands.
"""

import argparse

from dyexplainer import __version__
from dyexplainer.cli.commands import evaluate, explain, ingest, recover, synth, sweep, train

COMMANDS = [ingest, synth, train, evaluate, explain, sweep, recover]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyexplainer",
        description="Explainable dynamic graph neural networks with live updates.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser

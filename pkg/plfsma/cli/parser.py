import argparse

from plfsma import __version__
from plfsma.cli.commands import (
    candidates,
    compare,
    fit,
    fpca,
    generate,
    predict,
    ratio,
    replay,
    simulate,
)

# register every sub-command module
COMMANDS = [simulate, ratio, generate, candidates, fpca, fit, predict, compare, replay]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plfsma",
        description="Model averaging for partially linear functional additive models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def handlers() -> dict:
    return {module.NAME: module.run for module in COMMANDS}

import argparse
from pathlib import Path

from plfsma.cli.commands import utils
from plfsma.cli.commands.fit import add_method, methods
from plfsma.core.errors import EXIT_OK
from plfsma.estimation.pipeline import compare_methods
from plfsma.schemas.candidate import load_candidate_specs

NAME = "compare"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME, help="mean out-of-sample MSPE per method over repeated random splits"
    )
    utils.add_dataset(parser)
    parser.add_argument("--candidates", type=Path, required=True)
    add_method(parser)
    parser.add_argument("--split", type=float, default=0.8, help="training fraction")
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--min-train", type=int, default=10)
    utils.add_transforms(parser)
    parser.add_argument("--out", type=Path, required=True)
    utils.add_seed(parser)
    utils.add_threads(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    specs = load_candidate_specs(args.candidates)
    ds = utils.load_dataset(args)
    table = compare_methods(
        ds,
        specs,
        fraction=args.split,
        reps=args.reps,
        seed=args.seed,
        methods=methods(args),
        standardize_cols=utils.standardize_columns(args),
        y_transform=utils.y_transform(args),
        min_train=args.min_train,
        threads=utils.threads(args),
    )
    utils.write_table(table, args.out)
    inputs = utils.input_paths(args, ("scalars", "response", "curves", "candidates"))
    utils.write_manifest(args, args.out, inputs)
    return EXIT_OK

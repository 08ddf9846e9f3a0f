import argparse
from pathlib import Path

from plfsma.cli.commands import utils
from plfsma.core import settings
from plfsma.core.errors import EXIT_OK
from plfsma.schemas.design import DesignConfig
from plfsma.simulation.study import optimality_ratio

NAME = "ratio"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME, help="loss of the MMA weights relative to the best simplex weights"
    )
    parser.add_argument("--design", type=int, choices=[1, 2, 3], required=True)
    parser.add_argument("--n", type=utils.int_list, required=True, help="sample sizes, e.g. 50,100,200,400")
    parser.add_argument("--r2", type=float, required=True)
    parser.add_argument("--reps", type=int, default=settings.DEFAULT_REPS)
    parser.add_argument("--candidates", default="m15a")
    parser.add_argument("--subset", type=utils.int_list, default=None)
    parser.add_argument("--step", type=float, default=0.05, help="simplex grid resolution")
    parser.add_argument("--grid", type=int, default=100)
    parser.add_argument("--out", type=Path, required=True)
    utils.add_seed(parser)
    utils.add_threads(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = DesignConfig.build(
        design=args.design,
        n=min(args.n),
        r2=args.r2,
        grid_size=args.grid,
        reps=args.reps,
        seed=args.seed,
        candidate_set=args.candidates,
        candidate_subset=tuple(args.subset) if args.subset else None,
    )
    table = optimality_ratio(
        config, grid_step=args.step, sample_sizes=args.n, threads=utils.threads(args)
    )
    utils.write_table(table, args.out)
    utils.write_manifest(args, args.out)
    return EXIT_OK

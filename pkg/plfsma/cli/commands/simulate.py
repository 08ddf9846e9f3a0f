import argparse
import logging
from pathlib import Path

from plfsma.cli.commands import utils
from plfsma.core import settings
from plfsma.core.errors import EXIT_OK
from plfsma.schemas.design import DesignConfig
from plfsma.simulation.study import run_study

logger = logging.getLogger(__name__)

NAME = "simulate"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        NAME, help="replicated simulation study: MSE and NMSE of every method"
    )
    parser.add_argument("--design", type=int, choices=[1, 2, 3], required=True)
    parser.add_argument("--n", type=int, required=True, help="sample size")
    parser.add_argument("--r2", type=float, required=True, help="target population R²")
    parser.add_argument("--reps", type=int, default=settings.DEFAULT_REPS)
    parser.add_argument("--candidates", default="m15a", help="m15a, m15b or m21")
    parser.add_argument(
        "--subset", type=utils.int_list, default=None, help="keep these candidate indices only"
    )
    parser.add_argument("--grid", type=int, default=100, help="curve grid size")
    parser.add_argument("--out", type=Path, required=True, help="output CSV")
    parser.add_argument(
        "--records",
        action="store_true",
        default=settings.WRITE_RECORDS,
        help="also write per-replication losses and weights",
    )
    utils.add_seed(parser)
    utils.add_threads(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Run one design cell and write the method table.

    Writes `--out`, its manifest and, with `--records`, `<out>.records.csv`.
    """
    config = DesignConfig.build(
        design=args.design,
        n=args.n,
        r2=args.r2,
        grid_size=args.grid,
        reps=args.reps,
        seed=args.seed,
        candidate_set=args.candidates,
        candidate_subset=tuple(args.subset) if args.subset else None,
    )
    result = run_study(config, threads=utils.threads(args))
    utils.write_table(result.table, args.out)
    if args.records:
        out = Path(args.out)
        utils.write_table(result.records_frame(), out.with_name(out.stem + ".records.csv"))
    utils.write_manifest(args, args.out)
    return EXIT_OK

import argparse
from pathlib import Path

from plfsma.cli.commands import utils
from plfsma.core.errors import EXIT_OK
from plfsma.data.ingest import write_dataset
from plfsma.schemas.design import DesignConfig
from plfsma.simulation.designs import make_dataset

NAME = "generate"


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="write a synthetic dataset in the input CSV layout")
    parser.add_argument("--design", type=int, choices=[1, 2, 3], required=True)
    parser.add_argument("--n", type=int, required=True)
    parser.add_argument("--r2", type=float, required=True)
    parser.add_argument("--grid", type=int, default=100)
    parser.add_argument("--scalars-count", type=int, default=5, help="Z columns to keep")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    utils.add_seed(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    # validates design, n and r2 the same way the study does
    DesignConfig.build(design=args.design, n=args.n, r2=args.r2, grid_size=args.grid, seed=args.seed)
    ds = make_dataset(args.design, args.n, args.r2, args.seed, args.grid, args.scalars_count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, out / "scalars.csv", out / "response.csv", out / "curves.csv")
    utils.write_manifest(args, out)
    return EXIT_OK

import argparse
import logging
from pathlib import Path

from plfsma.cli.commands import utils
from plfsma.core.errors import EXIT_OK, UsageError
from plfsma.schemas.candidate import dump_candidate_specs
from plfsma.simulation.candidates import candidate_grid, enumerate_candidates

logger = logging.getLogger(__name__)

NAME = "candidates"


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="write a candidate-spec JSON file")
    parser.add_argument("--set", dest="set_id", default=None, help="m15a, m15b or m21")
    parser.add_argument("--n-z", type=int, default=None, help="scalar columns to enumerate")
    parser.add_argument("--n-xi", type=int, default=None, help="scores to enumerate")
    parser.add_argument("--z-mode", choices=["nested", "subsets"], default="subsets")
    parser.add_argument("--xi-mode", choices=["nested", "subsets"], default="nested")
    parser.add_argument("--bandwidth", default="auto", help="kernel bandwidth or 'auto'")
    parser.add_argument("--out", type=Path, required=True)
    parser.set_defaults(handler=run)


def _bandwidth(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--bandwidth must be a number or 'auto', got {text!r}") from None


def run(args: argparse.Namespace) -> int:
    if args.set_id is not None:
        if args.n_z is not None or args.n_xi is not None:
            raise UsageError("--set cannot be combined with --n-z/--n-xi")
        specs = enumerate_candidates(args.set_id)
    else:
        if args.n_z is None or args.n_xi is None:
            raise UsageError("give either --set or both --n-z and --n-xi")
        specs = candidate_grid(
            args.n_z, args.n_xi, args.z_mode, args.xi_mode, _bandwidth(args.bandwidth)
        )
    dump_candidate_specs(specs, args.out)
    logger.info("wrote %d candidates to %s", len(specs), args.out)
    utils.write_manifest(args, args.out)
    return EXIT_OK

import argparse
import json
import logging
from pathlib import Path

import pandas as pd

from plfsma.cli.commands import utils
from plfsma.core import settings
from plfsma.core.errors import EXIT_OK, UsageError
from plfsma.data.ingest import read_curves
from plfsma.estimation.fpca import (
    CurveSet,
    extract_scores,
    fit_fpca,
    recover_curves,
    resolve_presmooth_bandwidth,
)
from plfsma.schemas.model import BasisRecord

logger = logging.getLogger(__name__)

NAME = "fpca"


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="fit the FPCA basis of a curve file and write scores")
    parser.add_argument("--curves", type=Path, required=True)
    parser.add_argument("--k", type=int, default=None, help="scores to extract (default: all)")
    parser.add_argument("--presmooth", default="auto", help="presmoothing bandwidth or 'auto'")
    parser.add_argument("--alpha", type=float, default=None, help="eigenvalue decay for the rank-cap warning")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(handler=run)


def presmooth_value(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--presmooth must be a number or 'auto', got {text!r}") from None


def run(args: argparse.Namespace) -> int:
    """
    Write `basis.json` (grid, mean, eigenvalues, eigenfunctions) and
    `scores.csv` (raw scores `zeta<k>` and transformed scores `xi<k>`).
    """
    grid, obs = read_curves(args.curves)
    raw = CurveSet(grid, obs)
    bandwidth = resolve_presmooth_bandwidth(grid, presmooth_value(args.presmooth))
    curves = recover_curves(raw, bandwidth)
    basis = fit_fpca(curves)
    k = args.k or basis.n_components
    scores = extract_scores(basis, curves, k, alpha=args.alpha)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    record = BasisRecord(
        grid=basis.grid.tolist(),
        mean=basis.mean.tolist(),
        eigenvalues=basis.eigenvalues.tolist(),
        eigenfunctions=basis.eigenfunctions.tolist(),
        presmooth_bandwidth=bandwidth,
        n_scores=k,
    )
    (out / "basis.json").write_text(json.dumps(record.model_dump(), indent=1) + "\n", encoding="utf-8")
    columns = {f"zeta{j + 1}": scores.raw[:, j] for j in range(k)}
    columns.update({f"xi{j + 1}": scores.transformed[:, j] for j in range(k)})
    utils.write_table(pd.DataFrame(columns), out / "scores.csv")
    logger.info(
        "%d components retained, leading eigenvalue %s",
        basis.n_components,
        settings.FLOAT_FORMAT % basis.eigenvalues[0] if basis.n_components else "n/a",
    )
    utils.write_manifest(args, out, utils.input_paths(args, ("curves",)))
    return EXIT_OK

import argparse
from pathlib import Path

import pandas as pd

from plfsma.cli.commands import utils
from plfsma.core.errors import EXIT_OK, DataFormatError
from plfsma.data.ingest import read_curves, read_scalars
from plfsma.estimation.fpca import CurveSet
from plfsma.estimation.pipeline import from_artifact, predict_model
from plfsma.schemas.model import ModelArtifact

NAME = "predict"


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="predict new subjects with a fitted model")
    parser.add_argument("--model", type=Path, required=True, help="model directory or model.json")
    utils.add_dataset(parser, response=False)
    parser.add_argument("--out", type=Path, required=True, help="predictions CSV")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Write one column of predictions per fitted method, on the original response scale.

    Raises:

        - `DataFormatError`: if the curves are not on the training grid or the
          two input files disagree on the number of rows.
    """
    model = from_artifact(ModelArtifact.read(args.model))
    z_names, z = read_scalars(args.scalars)
    grid, obs = read_curves(args.curves)
    if z.shape[0] != obs.shape[0]:
        raise DataFormatError(
            f"row counts differ between files ({args.scalars}: {z.shape[0]}, "
            f"{args.curves}: {obs.shape[0]})"
        )
    predictions = predict_model(model, z_names, z, CurveSet(grid, obs))
    utils.write_table(pd.DataFrame(predictions), args.out)
    model_file = args.model / "model.json" if args.model.is_dir() else args.model
    inputs = utils.input_paths(args, ("scalars", "curves"))
    inputs["model"] = model_file
    utils.write_manifest(args, args.out, inputs)
    return EXIT_OK

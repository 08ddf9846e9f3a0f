import argparse
import logging
from pathlib import Path

import pandas as pd

from plfsma.cli.commands import utils
from plfsma.cli.commands.fpca import presmooth_value
from plfsma.core.errors import EXIT_OK
from plfsma.data.ingest import standardize
from plfsma.estimation.averaging import ALL_METHODS, Method
from plfsma.estimation.pipeline import fit_model, fitted_values, to_artifact, weights_table
from plfsma.schemas.candidate import load_candidate_specs

logger = logging.getLogger(__name__)

NAME = "fit"
METHOD_CHOICES = [method.value.lower() for method in Method] + ["all"]


def add_method(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", type=str.lower, choices=METHOD_CHOICES, default="all")


def methods(args: argparse.Namespace) -> tuple[Method, ...]:
    return ALL_METHODS if args.method == "all" else (Method.parse(args.method),)


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="fit the averaged model on a dataset")
    utils.add_dataset(parser)
    parser.add_argument("--candidates", type=Path, required=True, help="candidate-spec JSON/YAML")
    add_method(parser)
    utils.add_transforms(parser)
    parser.add_argument("--presmooth", default="auto")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    utils.add_seed(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Fit every candidate and weighting method and write the model directory.

    Outputs:

        - `model.json`: the model artifact `predict` reads.
        - `weights.csv`: one row per method with its weights and Mallows criterion.
        - `fitted.csv`: in-sample fitted values per method, on the original scale.
    """
    specs = load_candidate_specs(args.candidates)
    ds = utils.load_dataset(args)
    ds = standardize(ds, utils.standardize_columns(args), utils.y_transform(args))
    model = fit_model(ds, specs, methods(args), presmooth_value(args.presmooth))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = to_artifact(model).write(out)
    logger.info("wrote %s", path)
    utils.write_table(weights_table(model), out / "weights.csv")
    utils.write_table(pd.DataFrame(fitted_values(model)), out / "fitted.csv")
    inputs = utils.input_paths(args, ("scalars", "response", "curves", "candidates"))
    utils.write_manifest(args, out, inputs)
    return EXIT_OK

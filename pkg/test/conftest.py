import json
from pathlib import Path

import numpy as np
import pytest

from plfsma.core import numerics
from plfsma.data.ingest import read_dataset, write_dataset
from plfsma.estimation.candidate import fit_candidates
from plfsma.estimation.fpca import extract_scores, fit_fpca, recover_curves
from plfsma.schemas.candidate import CandidateSpec
from plfsma.simulation.designs import make_dataset, simulate_design

DESIGN_TWO_FIXTURE = Path(__file__).parent / "fixtures" / "design2"

SMALL_SPECS = [
    CandidateSpec(z_cols=(0,), xi_cols=(0,)),
    CandidateSpec(z_cols=(0, 1), xi_cols=(0, 1)),
    CandidateSpec(z_cols=(), xi_cols=(0, 1, 2)),
]


@pytest.fixture
def rng():
    return numerics.random_stream(20240601)


@pytest.fixture(scope="session")
def small_design():
    """Design 1 sample with n=60 on a 40-point grid."""
    return simulate_design(1, 60, 0.5, 40, numerics.random_stream(11))


@pytest.fixture(scope="session")
def small_fits(small_design):
    curves = recover_curves(small_design.curves)
    basis = fit_fpca(curves)
    scores = extract_scores(basis, curves, 3)
    fits = fit_candidates(small_design.y, small_design.z, scores, SMALL_SPECS)
    return small_design, scores, fits


@pytest.fixture(scope="session")
def synthetic_dataset():
    return make_dataset(2, 80, 0.5, seed=3, grid_size=40)


@pytest.fixture
def dataset_files(tmp_path, synthetic_dataset):
    paths = {
        "scalars": tmp_path / "scalars.csv",
        "response": tmp_path / "response.csv",
        "curves": tmp_path / "curves.csv",
    }
    write_dataset(synthetic_dataset, paths["scalars"], paths["response"], paths["curves"])
    paths["candidates"] = tmp_path / "candidates.json"
    paths["candidates"].write_text(
        json.dumps([spec.model_dump(by_alias=True, mode="json") for spec in SMALL_SPECS])
    )
    return paths


def simplex_points(stream, m, count):
    return stream.dirichlet(np.ones(m), size=count)


@pytest.fixture(scope="session")
def design_two_files():
    """The bundled n=200 Design-2 dataset and its 9 candidate specs."""
    names = ("scalars", "response", "curves")
    paths = {name: DESIGN_TWO_FIXTURE / f"{name}.csv" for name in names}
    paths["candidates"] = DESIGN_TWO_FIXTURE / "candidates.json"
    return paths


@pytest.fixture(scope="session")
def design_two_dataset(design_two_files):
    return read_dataset(
        design_two_files["scalars"], design_two_files["response"], design_two_files["curves"]
    )

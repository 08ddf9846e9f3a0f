import json

import numpy as np
import pandas as pd
import pytest

from plfsma.cli.commands import candidates
from plfsma.core.errors import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from plfsma.main import main
from plfsma.schemas.manifest import RunManifest

SIMULATE = [
    "simulate", "--design", "1", "--n", "40", "--r2", "0.5", "--reps", "2",
    "--candidates", "m15a", "--seed", "7", "--grid", "30", "--threads", "1",
]


def _dataset_args(paths, response=True):
    args = ["--scalars", str(paths["scalars"]), "--curves", str(paths["curves"])]
    if response:
        args += ["--response", str(paths["response"])]
    return args


def test_simulate_writes_table_and_manifest(tmp_path):
    out = tmp_path / "s.csv"
    assert main(SIMULATE + ["--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out)
    assert len(table) == 6
    assert table.loc[table["method"] == "AIC", "nmse"].iloc[0] == 1.0
    manifest = RunManifest.read(tmp_path / "s.manifest.json")
    assert manifest.command == "simulate" and manifest.seed == 7
    assert manifest.config["design"] == 1


def test_simulate_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(SIMULATE + ["--out", str(first)]) == EXIT_OK
    assert main(SIMULATE + ["--out", str(second), "--records"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "b.records.csv").exists()


def test_invalid_design_is_a_usage_error(tmp_path):
    args = list(SIMULATE)
    args[args.index("--design") + 1] = "4"
    with pytest.raises(SystemExit) as excinfo:
        main(args + ["--out", str(tmp_path / "s.csv")])
    assert excinfo.value.code == EXIT_USAGE


def test_invalid_candidate_set_is_a_usage_error(tmp_path):
    args = list(SIMULATE)
    args[args.index("--candidates") + 1] = "m99"
    assert main(args + ["--out", str(tmp_path / "s.csv")]) == EXIT_USAGE


def test_fit_predict_round_trip(tmp_path, dataset_files, synthetic_dataset):
    model_dir = tmp_path / "model"
    fit_args = ["fit", *_dataset_args(dataset_files), "--candidates", str(dataset_files["candidates"])]
    fit_args += ["--method", "all", "--standardize", "all", "--y-transform", "standardize"]
    assert main(fit_args + ["--out", str(model_dir)]) == EXIT_OK
    weights = pd.read_csv(model_dir / "weights.csv")
    assert list(weights["method"]) == ["MMA", "AIC", "BIC", "SAIC", "SBIC", "EQUAL"]
    assert weights["criterion_value"].notna().all()
    assert (model_dir / "manifest.json").exists()

    out = tmp_path / "pred.csv"
    predict_args = ["predict", "--model", str(model_dir), *_dataset_args(dataset_files, False)]
    assert main(predict_args + ["--out", str(out)]) == EXIT_OK
    predictions = pd.read_csv(out)
    fitted = pd.read_csv(model_dir / "fitted.csv")
    assert len(predictions) == synthetic_dataset.n
    assert np.allclose(predictions.to_numpy(), fitted[predictions.columns].to_numpy(), atol=1e-8)


def test_fit_single_method(tmp_path, dataset_files):
    args = ["fit", *_dataset_args(dataset_files), "--candidates", str(dataset_files["candidates"])]
    assert main(args + ["--method", "mma", "--out", str(tmp_path / "m")]) == EXIT_OK
    assert list(pd.read_csv(tmp_path / "m" / "weights.csv")["method"]) == ["MMA"]


def test_fit_rejects_candidate_without_scores(tmp_path, dataset_files):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"z": [0], "xi": []}]))
    args = ["fit", *_dataset_args(dataset_files), "--candidates", str(bad), "--out", str(tmp_path / "m")]
    assert main(args) == EXIT_USAGE


def test_predict_grid_mismatch(tmp_path, dataset_files):
    model_dir = tmp_path / "model"
    args = ["fit", *_dataset_args(dataset_files), "--candidates", str(dataset_files["candidates"])]
    assert main(args + ["--out", str(model_dir)]) == EXIT_OK
    curves = pd.read_csv(dataset_files["curves"])
    curves.columns = [f"t:{i}" for i in range(curves.shape[1])]
    other = tmp_path / "other_curves.csv"
    curves.to_csv(other, index=False)
    predict_args = ["predict", "--model", str(model_dir), "--scalars", str(dataset_files["scalars"])]
    predict_args += ["--curves", str(other), "--out", str(tmp_path / "p.csv")]
    assert main(predict_args) == EXIT_DATA


def test_compare(tmp_path, dataset_files):
    out = tmp_path / "compare.csv"
    args = ["compare", *_dataset_args(dataset_files), "--candidates", str(dataset_files["candidates"])]
    args += ["--split", "0.8", "--reps", "1", "--seed", "3", "--threads", "1", "--out", str(out)]
    assert main(args) == EXIT_OK
    table = pd.read_csv(out)
    assert len(table) == 6
    assert table["se"].isna().all()


def test_generate_and_replay(tmp_path):
    out = tmp_path / "data"
    args = ["generate", "--design", "2", "--n", "30", "--r2", "0.5", "--grid", "20", "--seed", "4"]
    assert main(args + ["--out", str(out)]) == EXIT_OK
    header = (out / "scalars.csv").read_text().splitlines()[0]
    assert header == "Z1,Z2,Z3,Z4,Z5"
    again = tmp_path / "again"
    assert main(["replay", str(out / "manifest.json"), "--out", str(again)]) == EXIT_OK
    for name in ("scalars.csv", "response.csv", "curves.csv"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_replay_detects_changed_inputs(tmp_path, dataset_files):
    out = tmp_path / "fpca"
    assert main(["fpca", "--curves", str(dataset_files["curves"]), "--k", "3", "--out", str(out)]) == EXIT_OK
    text = dataset_files["curves"].read_text()
    dataset_files["curves"].write_text(text + text.splitlines()[-1] + "\n")
    assert main(["replay", str(out / "manifest.json")]) == EXIT_DATA


def test_fpca_outputs(tmp_path, dataset_files):
    out = tmp_path / "fpca"
    assert main(["fpca", "--curves", str(dataset_files["curves"]), "--k", "2", "--out", str(out)]) == EXIT_OK
    basis = json.loads((out / "basis.json").read_text())
    assert len(basis["eigenfunctions"][0]) == len(basis["grid"])
    scores = pd.read_csv(out / "scores.csv")
    assert list(scores.columns) == ["zeta1", "zeta2", "xi1", "xi2"]
    assert ((scores[["xi1", "xi2"]] > 0) & (scores[["xi1", "xi2"]] < 1)).all().all()


def test_candidates_command(tmp_path):
    out = tmp_path / "c.json"
    args = ["candidates", "--n-z", "2", "--n-xi", "3", "--xi-mode", "subsets", "--out", str(out)]
    assert main(args) == EXIT_OK
    assert len(json.loads(out.read_text())) == 21
    assert main(["candidates", "--set", "m21", "--out", str(out)]) == EXIT_OK
    assert len(json.loads(out.read_text())) == 21
    assert main(["candidates", "--set", "m21", "--n-z", "2", "--out", str(out)]) == EXIT_USAGE


@pytest.mark.slow
def test_bundled_fixture_workflow(tmp_path, design_two_files):
    data = _dataset_args(design_two_files)
    candidate_args = ["--candidates", str(design_two_files["candidates"])]
    model_dir = tmp_path / "model"
    assert main(["fit", *data, *candidate_args, "--out", str(model_dir)]) == EXIT_OK

    predictions = tmp_path / "pred.csv"
    predict_args = ["predict", "--model", str(model_dir), *_dataset_args(design_two_files, False)]
    assert main(predict_args + ["--out", str(predictions)]) == EXIT_OK
    assert len(pd.read_csv(predictions)) == 200

    out = tmp_path / "compare.csv"
    compare_args = ["compare", *data, *candidate_args, "--split", "0.8", "--reps", "50", "--seed", "1"]
    assert main(compare_args + ["--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out).set_index("method")
    assert (table["reps_used"] >= 48).all()
    others = table.drop(index="MMA")["mean_mspe"]
    assert table.loc["MMA", "mean_mspe"] <= 1.05 * others.min()


def test_unexpected_errors_exit_as_numerical_failures(tmp_path, monkeypatch):
    def broken(args):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(candidates, "run", broken)
    args = ["candidates", "--set", "m21", "--out", str(tmp_path / "c.json")]
    assert main(args) == EXIT_NUMERICAL

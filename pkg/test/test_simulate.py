import numpy as np
import pytest

from plfsma.core import numerics
from plfsma.core.errors import ConfigurationError
from plfsma.estimation.candidate import hat_diagnostics
from plfsma.schemas.candidate import CandidateSpec
from plfsma.schemas.design import CandidateSetId, DesignConfig
from plfsma.simulation.candidates import candidate_grid, enumerate_candidates, index_sets
from plfsma.simulation.designs import (
    design_grid,
    eigenfunctions,
    make_dataset,
    noise_scale,
    realized_r2,
    simulate_design,
)
from plfsma.simulation.study import fit_simulated, optimality_ratio, run_study, simplex_grid


def _config(**overrides):
    values = dict(design=1, n=40, r2=0.5, grid_size=30, reps=3, seed=7, candidate_set="m15a")
    values.update(overrides)
    return DesignConfig.build(**values)


def test_index_sets():
    assert index_sets(3, "nested") == [(0,), (0, 1), (0, 1, 2)]
    assert index_sets(2, "subsets") == [(0,), (1,), (0, 1)]
    with pytest.raises(ConfigurationError):
        index_sets(0, "nested")


@pytest.mark.parametrize("set_id, size", [("m15a", 15), ("M15B", 15), (CandidateSetId.M21, 21)])
def test_candidate_set_sizes(set_id, size):
    assert len(enumerate_candidates(set_id)) == size


def test_candidate_set_order():
    specs = enumerate_candidates("m15a")
    assert (specs[0].z_cols, specs[0].xi_cols) == ((0,), (0,))
    assert (specs[1].z_cols, specs[1].xi_cols) == ((0,), (0, 1))
    assert (specs[-1].z_cols, specs[-1].xi_cols) == ((0, 1, 2, 3, 4), (0, 1, 2))
    m21 = enumerate_candidates("m21")
    assert (m21[2].z_cols, m21[2].xi_cols) == ((0,), (0, 1))


def test_unknown_candidate_set():
    with pytest.raises(ConfigurationError):
        enumerate_candidates("m99")


@pytest.mark.parametrize(
    "args, size",
    [
        ((2, 2, "subsets", "subsets"), 9),
        ((2, 3, "subsets", "subsets"), 21),
        ((2, 4, "subsets", "subsets"), 45),
        ((3, 4, "nested", "nested"), 12),
        ((4, 4, "nested", "nested"), 16),
    ],
)
def test_candidate_grid_sizes(args, size):
    assert len(candidate_grid(*args)) == size


def test_design_config_validation():
    with pytest.raises(ConfigurationError):
        _config(design=4)
    with pytest.raises(ConfigurationError):
        _config(r2=1.0)
    with pytest.raises(ConfigurationError):
        _config(n=5)


def test_simulation_shapes_and_determinism():
    first = simulate_design(2, 30, 0.7, 25, numerics.random_stream(4))
    second = simulate_design(2, 30, 0.7, 25, numerics.random_stream(4))
    assert first.z.shape == (30, 50) and first.curves.obs.shape == (30, 25)
    assert first.zeta.shape == (30, 20)
    assert np.array_equal(first.y, second.y)
    assert np.array_equal(first.curves.obs, second.curves.obs)
    assert np.all((first.xi > 0) & (first.xi < 1))
    assert np.all(first.noise_variance >= 0.48 * 0.01)
    assert first.curves.grid[0] == 0.0 and first.curves.grid[-1] == 10.0


def test_eigenfunctions_orthonormal():
    for design in (1, 2):
        grid = design_grid(design, 2001)
        phi = eigenfunctions(design, grid)[:5]
        gram = numerics.trapz(grid, phi[:, None, :] * phi[None, :, :])
        assert np.allclose(gram, np.eye(5), atol=1e-5)


def test_correlated_design_structure():
    data = simulate_design(3, 20000, 1.0, 10, numerics.random_stream(8))
    standardized = data.zeta[:, 0]
    for j in range(3):
        corr = np.corrcoef(standardized, data.z[:, j])[0, 1]
        assert corr == pytest.approx(0.5 ** (j + 1), abs=0.03)
    assert np.allclose(data.noise_variance, data.z[:, 0] ** 2 + 0.01)


def test_independent_design_has_uncorrelated_scores():
    data = simulate_design(1, 20000, 1.0, 10, numerics.random_stream(8))
    assert abs(np.corrcoef(data.zeta[:, 0], data.z[:, 0])[0, 1]) < 0.03
    assert np.allclose(data.noise_variance, 1.0)


def test_noise_calibration_hits_target():
    assert noise_scale(1, 0.5, 3) > noise_scale(1, 0.8, 3)
    assert realized_r2(1, 0.5, seed=3, draws=50000, check_seed=4) == pytest.approx(0.5, abs=0.03)
    assert realized_r2(2, 0.3, seed=3, draws=50000, check_seed=4) == pytest.approx(0.3, abs=0.03)


def test_make_dataset():
    ds = make_dataset(2, 50, 0.5, seed=1, grid_size=20)
    assert ds.z_names == ("Z1", "Z2", "Z3", "Z4", "Z5")
    assert ds.z.shape == (50, 5) and ds.curves.obs.shape == (50, 20)
    again = make_dataset(2, 50, 0.5, seed=1, grid_size=20)
    assert np.array_equal(ds.y, again.y)


def test_simplex_grid():
    grid = simplex_grid(3, 0.5)
    assert grid.shape == (6, 3)
    assert np.allclose(grid.sum(axis=1), 1.0)
    assert len({tuple(row) for row in grid}) == 6
    with pytest.raises(ConfigurationError):
        simplex_grid(3, 0.3)
    with pytest.raises(ConfigurationError, match="points"):
        simplex_grid(15, 0.05)


def test_run_study_table():
    result = run_study(_config(), threads=1)
    table = result.table
    assert list(table["method"]) == ["MMA", "AIC", "BIC", "SAIC", "SBIC", "EQUAL"]
    assert table.loc[table["method"] == "AIC", "nmse"].iloc[0] == 1.0
    assert (table["reps_used"] == 3).all()
    assert (table["oracle_mse"] <= table["mse"] + 1e-12).all()
    records = result.records_frame()
    assert len(records) == 3 * 6


def test_run_study_is_reproducible():
    first = run_study(_config(reps=2), threads=1).table
    second = run_study(_config(reps=2), threads=1).table
    assert first.equals(second)


def test_run_study_independent_of_workers():
    serial = run_study(_config(reps=2), threads=1).table
    parallel = run_study(_config(reps=2), threads=2).table
    assert serial.equals(parallel)


def test_candidate_subset_out_of_range():
    with pytest.raises(ConfigurationError, match="out of range"):
        run_study(_config(candidate_subset=(0, 99)), threads=1)


def test_optimality_ratio_at_least_one():
    table = optimality_ratio(
        _config(candidate_subset=(0, 1, 2), reps=3), grid_step=0.1, sample_sizes=[40, 60], threads=1
    )
    assert list(table["n"]) == [40, 60]
    assert (table["median_ratio"] >= 1.0 - 1e-8).all()


@pytest.mark.slow
def test_mma_pattern_design_one():
    strong = run_study(_config(n=400, r2=0.7, grid_size=100, reps=200, seed=1)).table.set_index("method")
    assert strong.loc["MMA", "nmse"] < 1.0
    assert strong.loc["SBIC", "nmse"] > strong.loc["MMA", "nmse"]
    weak = run_study(_config(n=100, r2=0.1, grid_size=100, reps=200, seed=1)).table.set_index("method")
    assert weak.loc["EQUAL", "nmse"] < weak.loc["MMA", "nmse"]


@pytest.mark.slow
@pytest.mark.parametrize("r2", [0.3, 0.5])
def test_mma_pattern_design_three(r2):
    table = run_study(
        _config(design=3, n=200, r2=r2, grid_size=100, reps=200, seed=2, candidate_set="m21")
    ).table.set_index("method")
    assert table.loc["MMA", "nmse"] <= table.loc["AIC", "nmse"]


@pytest.mark.slow
def test_optimality_ratio_trend():
    table = optimality_ratio(
        _config(n=50, r2=0.5, grid_size=100, reps=100, candidate_subset=(0, 1, 2)),
        grid_step=0.05,
        sample_sizes=[50, 400],
    )
    assert table["median_ratio"].iloc[1] < table["median_ratio"].iloc[0]
    assert table["median_ratio"].iloc[1] <= 1.10


@pytest.mark.slow
def test_seed_determinism_on_acceptance_cell():
    config = _config(n=400, r2=0.7, grid_size=100, reps=5, seed=1)
    assert run_study(config, threads=1).table.equals(run_study(config, threads=4).table)


def test_hat_norm_stays_bounded_over_m15a():
    eta = noise_scale(1, 0.5, 7)
    data = simulate_design(1, 200, eta, 100, numerics.random_stream(11))
    fits = fit_simulated(data, enumerate_candidates("m15a"))
    assert len(fits) == 15
    assert max(hat_diagnostics(fit)[0] for fit in fits) <= 10.0


def test_scores_carry_signal_beyond_scalars():
    eta = noise_scale(1, 0.5, 7)
    data = simulate_design(1, 400, eta, 100, numerics.random_stream(12))
    [fit] = fit_simulated(data, [CandidateSpec(z_cols=(0, 1, 2), xi_cols=(0, 1, 2))])
    design = np.column_stack([np.ones(400), data.z[:, :3]])
    ols = design @ np.linalg.lstsq(design, data.y, rcond=None)[0]
    assert np.mean((fit.fitted - data.mu) ** 2) < np.mean((ols - data.mu) ** 2)

"""Replicated simulation studies.

Each replication draws a fresh sample, runs the full feasible pipeline
(presmoothing, FPCA, score extraction, candidate fits, all six methods) and
records the in-sample loss ``‖μ̂ - μ‖²/n`` of every method against the true
mean. Replications are independent: replication ``d`` uses child ``d`` of
the master seed sequence, so results do not depend on the worker count, and
the aggregation is an ordered reduction.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import pandas as pd

from plfsma.core import numerics, settings
from plfsma.core.parallel import map_ordered
from plfsma.core.errors import ConfigurationError, NumericalFailure, PlfsmaException
from plfsma.estimation import averaging
from plfsma.estimation.averaging import Method
from plfsma.estimation.candidate import CandidateFit, fit_candidates
from plfsma.estimation.fpca import extract_scores, fit_fpca, recover_curves
from plfsma.schemas.design import DesignConfig
from plfsma.schemas.candidate import CandidateSpec, max_score_count
from plfsma.simulation.candidates import enumerate_candidates
from plfsma.simulation.designs import SimulatedData, noise_scale, simulate_design

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["design", "n", "r2", "method", "mse", "nmse", "reps_used", "oracle_mse"]


@dataclass(frozen=True)
class ReplicationRecord:
    rep_index: int
    losses: dict[str, float] = field(default_factory=dict)
    weights: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    oracle_loss: float | None = None
    unconverged: bool = False
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class StudyResult:
    config: DesignConfig
    table: pd.DataFrame
    records: list[ReplicationRecord] = field(repr=False)

    def records_frame(self) -> pd.DataFrame:
        """Long format: one row per replication and method."""
        rows = []
        for record in self.records:
            if record.failed:
                rows.append({"rep": record.rep_index, "method": None, "error": record.error})
                continue
            for method, loss in record.losses.items():
                rows.append(
                    {
                        "rep": record.rep_index,
                        "method": method,
                        "loss": loss,
                        "oracle_loss": record.oracle_loss,
                        "weights": ";".join(repr(float(w)) for w in record.weights[method]),
                        "error": None,
                    }
                )
        return pd.DataFrame(rows)


def study_candidates(config: DesignConfig) -> list[CandidateSpec]:
    specs = enumerate_candidates(config.candidate_set)
    if config.candidate_subset is None:
        return specs
    if max(config.candidate_subset) >= len(specs):
        raise ConfigurationError(
            f"candidate_subset index {max(config.candidate_subset)} is out of range for "
            f"{config.candidate_set.value} with {len(specs)} candidates"
        )
    return [specs[i] for i in config.candidate_subset]


def fit_simulated(data: SimulatedData, specs: list[CandidateSpec]) -> list[CandidateFit]:
    """Run the feasible estimation chain on one simulated sample."""
    curves = recover_curves(data.curves)
    basis = fit_fpca(curves)
    scores = extract_scores(basis, curves, max_score_count(specs))
    return fit_candidates(data.y, data.z, scores, specs)


def _replicate(
    config: DesignConfig,
    specs: list[CandidateSpec],
    eta: float,
    seed: np.random.SeedSequence,
    rep_index: int,
) -> ReplicationRecord:
    try:
        stream = numerics.random_stream(seed)
        data = simulate_design(config.design, config.n, eta, config.grid_size, stream)
        fits = fit_simulated(data, specs)
        results = averaging.run_all_methods(fits, data.y)
        oracle = averaging.oracle_weights(fits, data.mu)
    except (PlfsmaException, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("replication %d failed: %s", rep_index, exc)
        return ReplicationRecord(rep_index=rep_index, error=str(exc))
    n = config.n
    losses = {}
    weights = {}
    for result in results:
        error = result.fitted - data.mu
        losses[result.method.value] = float(error @ error) / n
        weights[result.method.value] = result.weights.weights
    unconverged = any(result.weights.unconverged for result in results)
    return ReplicationRecord(
        rep_index=rep_index,
        losses=losses,
        weights=weights,
        oracle_loss=oracle.objective / n,
        unconverged=unconverged,
    )


def _check_failures(records: list[ReplicationRecord], label: str) -> list[ReplicationRecord]:
    failed = sum(record.failed for record in records)
    if failed > settings.MAX_FAILED_FRACTION * len(records):
        raise NumericalFailure(
            f"{label}: {failed} of {len(records)} replications failed "
            f"(limit {settings.MAX_FAILED_FRACTION:.0%})"
        )
    if failed:
        logger.warning("%s: skipped %d failed replications", label, failed)
    return [record for record in records if not record.failed]


def run_study(config: DesignConfig, threads: int | None = None) -> StudyResult:
    """Run ``config.reps`` replications and tabulate MSE and NMSE per method.

    NMSE is each method's MSE divided by the MSE of AIC selection.

    Raises:
        NumericalFailure: If more than the allowed fraction of replications fail.
    """
    specs = study_candidates(config)
    eta = noise_scale(config.design, config.r2, config.seed)
    logger.info(
        "design %d, n=%d, r2=%.2f, %s (%d candidates), %d replications, eta=%.4g",
        config.design,
        config.n,
        config.r2,
        config.candidate_set.value,
        len(specs),
        config.reps,
        eta,
    )
    seeds = numerics.derive_seeds(config.seed, config.reps)
    records = map_ordered(
        _replicate,
        [
            [config] * config.reps,
            [specs] * config.reps,
            [eta] * config.reps,
            seeds,
            list(range(config.reps)),
        ],
        threads,
    )
    used = _check_failures(records, f"design {config.design} n={config.n} r2={config.r2}")

    methods = [method.value for method in Method]
    mse = {method: float(np.mean([record.losses[method] for record in used])) for method in methods}
    oracle = float(np.mean([record.oracle_loss for record in used]))
    table = pd.DataFrame(
        [
            {
                "design": config.design,
                "n": config.n,
                "r2": config.r2,
                "method": method,
                "mse": mse[method],
                "nmse": mse[method] / mse[Method.AIC.value],
                "reps_used": len(used),
                "oracle_mse": oracle,
            }
            for method in methods
        ],
        columns=TABLE_COLUMNS,
    )
    return StudyResult(config=config, table=table, records=records)


def simplex_grid(m: int, step: float) -> np.ndarray:
    """All points of the unit simplex in ``R^m`` with coordinates on multiples of ``step``.

    Raises:
        ConfigurationError: If ``1/step`` is not an integer or the grid exceeds
            ``PLFSMA_MAX_GRID_POINTS``.
    """
    divisions = int(round(1.0 / step))
    if divisions < 1 or abs(divisions * step - 1.0) > 1e-9:
        raise ConfigurationError(f"grid step {step} must divide 1 evenly")
    count = comb(divisions + m - 1, m - 1)
    if count > settings.MAX_GRID_POINTS:
        raise ConfigurationError(
            f"a simplex grid with step {step} over {m} candidates has {count} points "
            f"(limit {settings.MAX_GRID_POINTS}); use a larger step or fewer candidates"
        )
    points = []
    for bars in combinations(range(divisions + m - 1), m - 1):
        edges = (-1,) + bars + (divisions + m - 1,)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
    return np.asarray(points, dtype=float) / divisions


def _ratio_replicate(
    config: DesignConfig,
    specs: list[CandidateSpec],
    eta: float,
    seed: np.random.SeedSequence,
    grid: np.ndarray,
) -> float | None:
    try:
        stream = numerics.random_stream(seed)
        data = simulate_design(config.design, config.n, eta, config.grid_size, stream)
        fits = fit_simulated(data, specs)
        mma = averaging.mallows_weights(fits, data.y, averaging.estimate_omega(fits))
        oracle = averaging.oracle_weights(fits, data.mu)
    except (PlfsmaException, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("optimality-ratio replication failed: %s", exc)
        return None
    deviation = averaging.fitted_matrix(fits) - data.mu[:, None]
    gram = deviation.T @ deviation
    grid_min = float(np.min(np.einsum("pi,ij,pj->p", grid, gram, grid)))
    floor = min(grid_min, oracle.objective)
    loss = averaging.squared_loss(mma.weights.weights, fits, data.mu)
    if floor <= 0.0:
        return 1.0 if loss <= 0.0 else float("inf")
    return loss / floor


def optimality_ratio(
    config: DesignConfig,
    grid_step: float = 0.05,
    sample_sizes: list[int] | None = None,
    threads: int | None = None,
) -> pd.DataFrame:
    """Median of ``L(ω̂) / min_ω L(ω)`` per sample size.

    The minimum is taken over a simplex grid of resolution ``grid_step`` and
    the exact oracle weights, whichever is lower.
    """
    specs = study_candidates(config)
    grid = simplex_grid(len(specs), grid_step)
    eta = noise_scale(config.design, config.r2, config.seed)
    seeds = numerics.derive_seeds(config.seed, config.reps)
    rows = []
    for n in sample_sizes or [config.n]:
        sized = config.model_copy(update={"n": n})
        ratios = map_ordered(
            _ratio_replicate,
            [[sized] * sized.reps, [specs] * sized.reps, [eta] * sized.reps, seeds, [grid] * sized.reps],
            threads,
        )
        usable = [ratio for ratio in ratios if ratio is not None]
        failed = len(ratios) - len(usable)
        if failed > settings.MAX_FAILED_FRACTION * len(ratios):
            raise NumericalFailure(f"optimality ratio at n={n}: {failed} replications failed")
        rows.append(
            {
                "n": n,
                "median_ratio": float(np.median(usable)),
                "mean_ratio": float(np.mean(usable)),
                "reps_used": len(usable),
            }
        )
        logger.info("n=%d: median loss ratio %.4f", n, rows[-1]["median_ratio"])
    return pd.DataFrame(rows)

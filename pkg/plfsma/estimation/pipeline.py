"""Fit, predict and compare on real (or generated) datasets.

``fit_model`` runs the whole feasible chain on a training dataset and keeps
what prediction needs: the FPCA basis and presmoothing bandwidth, every
candidate's coefficients, training scores and partial residuals, and the
weights of each requested method. ``predict_model`` pushes new curves
through the stored basis and combines candidate predictions with those
weights. Models round-trip through :class:`ModelArtifact`.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

from plfsma.core import numerics, settings
from plfsma.core.errors import ContractViolation, DataFormatError, NumericalFailure
from plfsma.core.parallel import map_ordered
from plfsma.data.ingest import (
    RESPONSE,
    ColumnTransform,
    Dataset,
    apply_standardization,
    invert_response,
    mspe,
    split,
    standardize,
)
from plfsma.estimation import averaging
from plfsma.estimation.averaging import ALL_METHODS, EnsembleResult, Method
from plfsma.estimation.candidate import CandidateFit, fit_candidates, hat_diagnostics
from plfsma.estimation.fpca import (
    CurveSet,
    FpcaBasis,
    ScoreMatrix,
    ensure_same_grid,
    extract_scores,
    fit_fpca,
    recover_curves,
    resolve_presmooth_bandwidth,
)
from plfsma.estimation.qp import WeightVector
from plfsma.schemas.candidate import CandidateSpec, max_score_count
from plfsma.schemas.model import (
    BasisRecord,
    CandidateRecord,
    EnsembleRecord,
    ModelArtifact,
    TransformRecord,
)

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ["method", "mean_mspe", "se", "reps_used"]


@dataclass(frozen=True)
class FittedModel:
    basis: FpcaBasis
    presmooth_bandwidth: float
    n_scores: int
    fits: list[CandidateFit] = field(repr=False)
    results: list[EnsembleResult] = field(repr=False)
    z_names: tuple[str, ...]
    transforms: dict[str, ColumnTransform] = field(default_factory=dict)
    y: np.ndarray = field(default=None, repr=False)
    omega_source: int = 0

    @property
    def methods(self) -> list[Method]:
        return [result.method for result in self.results]

    def result_for(self, method: Method | str) -> EnsembleResult:
        method = Method.parse(method) if isinstance(method, str) else method
        for result in self.results:
            if result.method is method:
                return result
        raise ContractViolation(f"method {method.value} was not fitted")


def fit_model(
    ds: Dataset,
    specs: list[CandidateSpec],
    methods=ALL_METHODS,
    presmooth: float | Literal["auto"] = "auto",
) -> FittedModel:
    """Run presmoothing, FPCA, candidate fits and the requested weighting methods.

    ``ds`` is used as given; standardise it beforehand if needed. Its
    ``transforms`` are stored with the model so that new data can be brought
    to the same scale.
    """
    bandwidth = resolve_presmooth_bandwidth(ds.curves.grid, presmooth)
    curves = recover_curves(ds.curves, bandwidth)
    basis = fit_fpca(curves)
    n_scores = max_score_count(specs)
    scores = extract_scores(basis, curves, n_scores)
    fits = fit_candidates(ds.y, ds.z, scores, specs)
    results = averaging.run_all_methods(fits, ds.y, methods)
    logger.info(
        "fitted %d candidates on n=%d with %d scores (%d FPCA components)",
        len(fits),
        ds.n,
        n_scores,
        basis.n_components,
    )
    return FittedModel(
        basis=basis,
        presmooth_bandwidth=bandwidth,
        n_scores=n_scores,
        fits=fits,
        results=results,
        z_names=ds.z_names,
        transforms=dict(ds.transforms),
        y=ds.y,
        omega_source=averaging.estimate_omega(fits).source_index,
    )


def score_curves(model: FittedModel, curves: CurveSet) -> ScoreMatrix:
    """Presmooth new curves like the training curves and project them on the stored basis.

    Raises:
        DataFormatError: If the curves are not on the training grid.
    """
    ensure_same_grid(model.basis.grid, curves.grid)
    recovered = recover_curves(curves, model.presmooth_bandwidth)
    return extract_scores(model.basis, recovered, model.n_scores)


def align_scalars(model: FittedModel, z_names, z: np.ndarray) -> np.ndarray:
    """Reorder new scalar columns to the training order and apply stored scalings."""
    z = numerics.as_finite(z, "scalar predictors", ndim=2)
    missing = [name for name in model.z_names if name not in z_names]
    if missing:
        raise DataFormatError(f"new data lack scalar columns {missing}")
    order = [list(z_names).index(name) for name in model.z_names]
    aligned = z[:, order].copy()
    for j, name in enumerate(model.z_names):
        if name in model.transforms:
            aligned[:, j] = model.transforms[name].apply(aligned[:, j])
    return aligned


def predict_model(
    model: FittedModel,
    z_names,
    z_new,
    curves_new: CurveSet,
    original_scale: bool = True,
    with_fallback: bool = False,
):
    """Predictions of every fitted method for new subjects.

    Args:
        model: A fitted or restored model.
        z_names: Column names of ``z_new``, matched to the training names.
        z_new: Raw (untransformed) scalar predictors.
        curves_new: Raw curve measurements on the training grid.
        original_scale: Undo the stored response transform.
        with_fallback: Also return the per-observation nearest-point masks.

    Returns:
        dict: Method name to prediction vector, or a ``(predictions, fallbacks)``
            pair of such dicts when ``with_fallback`` is set.
    """
    z = align_scalars(model, z_names, z_new)
    if z.shape[0] != curves_new.n:
        raise ContractViolation(f"{z.shape[0]} scalar rows but {curves_new.n} curves")
    scores = score_curves(model, curves_new)
    transform = model.transforms.get(RESPONSE) if original_scale else None
    predictions = {}
    fallbacks = {}
    for result in model.results:
        values, fallback = averaging.predict_with_fallback(result, model.fits, z, scores)
        predictions[result.method.value] = invert_response(values, transform)
        fallbacks[result.method.value] = fallback
    if with_fallback:
        return predictions, fallbacks
    return predictions


def fitted_values(model: FittedModel, original_scale: bool = True) -> dict[str, np.ndarray]:
    transform = model.transforms.get(RESPONSE) if original_scale else None
    return {
        result.method.value: invert_response(result.fitted, transform) for result in model.results
    }


def weights_table(model: FittedModel) -> pd.DataFrame:
    """One row per method: criterion value, convergence flag and the weight vector."""
    rows = []
    for result in model.results:
        row = {
            "method": result.method.value,
            "criterion_value": result.criterion_value,
            "converged": result.weights.converged,
        }
        row.update({f"w{m + 1}": float(w) for m, w in enumerate(result.weights.weights)})
        rows.append(row)
    return pd.DataFrame(rows)


def to_artifact(model: FittedModel) -> ModelArtifact:
    table = averaging.criteria_table(model.fits) if model.fits[0].hat is not None else None
    candidates = []
    for m, fit in enumerate(model.fits):
        lambda_max = hat_diagnostics(fit)[0] if fit.hat is not None else None
        candidates.append(
            CandidateRecord(
                spec=fit.spec,
                theta=fit.theta.tolist(),
                bandwidth=fit.bandwidth,
                trace_hat=fit.trace_hat,
                collinear=fit.collinear,
                aic=_finite_or_none(table.aic[m]) if table is not None else None,
                bic=_finite_or_none(table.bic[m]) if table is not None else None,
                lambda_max=lambda_max,
                xi_train=fit.xi_train.tolist(),
                partial_residuals=fit.partial_residuals.tolist(),
                fitted=fit.fitted.tolist(),
            )
        )
    basis = model.basis
    return ModelArtifact(
        z_names=list(model.z_names),
        transforms={
            name: TransformRecord(mean=t.mean, scale=t.scale, log=t.log)
            for name, t in model.transforms.items()
        },
        basis=BasisRecord(
            grid=basis.grid.tolist(),
            mean=basis.mean.tolist(),
            eigenvalues=basis.eigenvalues.tolist(),
            eigenfunctions=basis.eigenfunctions.tolist(),
            presmooth_bandwidth=model.presmooth_bandwidth,
            n_scores=model.n_scores,
        ),
        candidates=candidates,
        ensembles=[
            EnsembleRecord(
                method=result.method.value,
                weights=result.weights.weights.tolist(),
                criterion_value=result.criterion_value,
                converged=result.weights.converged,
                fitted=result.fitted.tolist(),
            )
            for result in model.results
        ],
        y_train=model.y.tolist(),
        omega_source=model.omega_source,
    )


def _finite_or_none(value: float) -> float | None:
    return float(value) if np.isfinite(value) else None


def from_artifact(artifact: ModelArtifact) -> FittedModel:
    """Rebuild a model for prediction. Restored candidates carry no hat matrix."""
    record = artifact.basis
    grid = np.asarray(record.grid)
    eigenfunctions = np.asarray(record.eigenfunctions, dtype=float).reshape(-1, grid.size)
    basis = FpcaBasis(
        grid=grid,
        mean=np.asarray(record.mean),
        eigenvalues=np.asarray(record.eigenvalues),
        eigenfunctions=eigenfunctions,
        weights=numerics.trapz_weights(grid),
    )
    y = np.asarray(artifact.y_train)
    fits = []
    for candidate in artifact.candidates:
        fitted = np.asarray(candidate.fitted)
        fits.append(
            CandidateFit(
                spec=candidate.spec,
                theta=np.asarray(candidate.theta, dtype=float),
                hat=None,
                fitted=fitted,
                residuals=y - fitted,
                trace_hat=candidate.trace_hat,
                bandwidth=candidate.bandwidth,
                xi_train=np.asarray(candidate.xi_train, dtype=float).reshape(y.size, -1),
                partial_residuals=np.asarray(candidate.partial_residuals),
                collinear=candidate.collinear,
            )
        )
    results = [
        EnsembleResult(
            method=Method.parse(ensemble.method),
            weights=WeightVector(
                weights=np.asarray(ensemble.weights),
                objective=(
                    ensemble.criterion_value if ensemble.criterion_value is not None else np.nan
                ),
                converged=ensemble.converged,
            ),
            fitted=np.asarray(ensemble.fitted),
            criterion_value=ensemble.criterion_value,
        )
        for ensemble in artifact.ensembles
    ]
    for result in results:
        if result.weights.weights.shape[0] != len(fits):
            raise DataFormatError(
                f"{result.method.value} has {result.weights.weights.shape[0]} weights "
                f"for {len(fits)} candidates"
            )
    return FittedModel(
        basis=basis,
        presmooth_bandwidth=record.presmooth_bandwidth,
        n_scores=record.n_scores,
        fits=fits,
        results=results,
        z_names=tuple(artifact.z_names),
        transforms={
            name: ColumnTransform(mean=t.mean, scale=t.scale, log=t.log)
            for name, t in artifact.transforms.items()
        },
        y=y,
        omega_source=artifact.omega_source,
    )


def _compare_replicate(
    ds: Dataset,
    specs: list[CandidateSpec],
    methods,
    fraction: float,
    standardize_cols,
    y_transform: str,
    min_train: int,
    seed: np.random.SeedSequence,
) -> dict[str, float] | None:
    stream = numerics.random_stream(seed)
    train, test = split(ds, fraction, stream, min_train=min_train)
    try:
        train = standardize(train, standardize_cols, y_transform)
        test = apply_standardization(test, train.transforms)
        model = fit_model(train, specs, methods)
        predictions = predict_model(
            model, test.z_names, test.z, test.curves, original_scale=False
        )
    except (NumericalFailure, ContractViolation, DataFormatError, np.linalg.LinAlgError) as exc:
        logger.warning("comparison split failed: %s", exc)
        return None
    return {method: mspe(test.y, values) for method, values in predictions.items()}


def compare_methods(
    ds: Dataset,
    specs: list[CandidateSpec],
    fraction: float = 0.8,
    reps: int = 50,
    seed: int = 0,
    methods=ALL_METHODS,
    standardize_cols=None,
    y_transform: str = "none",
    min_train: int = 10,
    threads: int | None = None,
) -> pd.DataFrame:
    """Repeat split, fit and predict; report mean MSPE and its standard error per method.

    MSPE is measured on the transformed response scale. Split ``r`` is drawn
    from child ``r`` of the master seed. The standard error is left empty for
    a single repetition.

    A split whose fit or prediction raises a package error is skipped and
    counted against the failure limit.
    """
    seeds = numerics.derive_seeds(seed, reps)
    outcomes = map_ordered(
        _compare_replicate,
        [
            [ds] * reps,
            [specs] * reps,
            [tuple(methods)] * reps,
            [fraction] * reps,
            [standardize_cols] * reps,
            [y_transform] * reps,
            [min_train] * reps,
            seeds,
        ],
        threads,
    )
    used = [outcome for outcome in outcomes if outcome is not None]
    failed = reps - len(used)
    if failed > settings.MAX_FAILED_FRACTION * reps or not used:
        raise NumericalFailure(f"{failed} of {reps} comparison splits failed")
    rows = []
    for method in used[0]:
        values = np.array([outcome[method] for outcome in used])
        se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else None
        rows.append(
            {"method": method, "mean_mspe": float(values.mean()), "se": se, "reps_used": values.size}
        )
    logger.info("compared %d methods over %d splits", len(rows), len(used))
    return pd.DataFrame(rows, columns=COMPARE_COLUMNS)

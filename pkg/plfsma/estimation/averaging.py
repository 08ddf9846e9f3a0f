"""Mallows-type model averaging and information-criterion baselines.

Given fitted candidates, the Mallows criterion

    C(ω) = ‖y - Σ ω_m μ̂_m‖² + 2 Σ ω_m tr(P̂_m Ω̂)

is minimised over the unit simplex. Ω̂ holds the squared residuals of the
largest candidate. AIC/BIC selection, their smoothed (exponential) weights
and equal weighting are computed from the same fits for comparison.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from plfsma.core import numerics
from plfsma.core.errors import ContractViolation
from plfsma.estimation.candidate import CandidateFit
from plfsma.estimation.fpca import ScoreMatrix
from plfsma.estimation.kernel import product_kernel
from plfsma.estimation.qp import SimplexQP, WeightVector, solve_simplex_qp

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    MMA = "MMA"
    AIC = "AIC"
    BIC = "BIC"
    SAIC = "SAIC"
    SBIC = "SBIC"
    EQUAL = "EQUAL"

    @classmethod
    def parse(cls, value: str) -> "Method":
        return cls(value.upper())


ALL_METHODS = tuple(Method)


@dataclass(frozen=True)
class VarianceEstimate:
    diagonal: np.ndarray
    source_index: int


@dataclass(frozen=True)
class InformationCriteria:
    aic: float
    bic: float
    saturated: bool = False


@dataclass(frozen=True)
class CriteriaTable:
    aic: np.ndarray
    bic: np.ndarray


@dataclass(frozen=True)
class EnsembleResult:
    method: Method
    weights: WeightVector
    fitted: np.ndarray = field(repr=False)
    criterion_value: float | None = None
    scores_table: CriteriaTable | None = field(default=None, repr=False)


def _check_fits(fits: list[CandidateFit], n: int | None = None) -> int:
    if not fits:
        raise ContractViolation("at least one candidate fit is required")
    sizes = {fit.n for fit in fits}
    if len(sizes) != 1:
        raise ContractViolation(f"candidate fits disagree on the sample size: {sorted(sizes)}")
    size = sizes.pop()
    if n is not None and size != n:
        raise ContractViolation(f"candidate fits have n={size} but the response has {n}")
    return size


def fitted_matrix(fits: list[CandidateFit]) -> np.ndarray:
    """Stack candidate fitted values as columns, ``(n, M)``."""
    return np.column_stack([fit.fitted for fit in fits])


def estimate_omega(fits: list[CandidateFit]) -> VarianceEstimate:
    """Squared residuals of the largest candidate (first one on ties)."""
    _check_fits(fits)
    sizes = np.array([fit.size for fit in fits])
    source = int(np.argmax(sizes))
    return VarianceEstimate(diagonal=fits[source].residuals ** 2, source_index=source)


def penalty_vector(fits: list[CandidateFit], omega: VarianceEstimate) -> np.ndarray:
    """``b_m = tr(P̂_m Ω̂) = Σ_i ε̂_i² (P̂_m)_ii`` for diagonal Ω̂."""
    return np.array([omega.diagonal @ np.diag(fit.hat) for fit in fits])


def mallows_criterion(weights, fits: list[CandidateFit], y, omega_diag) -> float:
    """Evaluate ``‖y - μ̂(ω)‖² + 2 tr(P̂(ω) Ω)`` for a diagonal Ω."""
    weights = np.asarray(weights, dtype=float)
    residual = y - fitted_matrix(fits) @ weights
    penalty = sum(w * (omega_diag @ np.diag(fit.hat)) for w, fit in zip(weights, fits))
    return float(residual @ residual + 2.0 * penalty)


def squared_loss(weights, fits: list[CandidateFit], mu) -> float:
    """In-sample loss ``‖μ̂(ω) - μ‖²``."""
    error = fitted_matrix(fits) @ np.asarray(weights, dtype=float) - mu
    return float(error @ error)


def averaged_hat(weights, fits: list[CandidateFit]) -> np.ndarray:
    return sum(w * fit.hat for w, fit in zip(weights, fits))


def conditional_risk(weights, fits: list[CandidateFit], mu, omega_diag) -> float:
    """``‖(P(ω) - I) μ‖² + tr(P(ω)ᵀ P(ω) Ω)`` for a diagonal Ω."""
    hat = averaged_hat(weights, fits)
    bias = hat @ mu - mu
    variance = float(np.sum(hat**2 * omega_diag[None, :]))
    return float(bias @ bias) + variance


def mallows_weights(fits: list[CandidateFit], y, omega: VarianceEstimate) -> EnsembleResult:
    """Minimise the feasible Mallows criterion over the simplex.

    Returns:
        EnsembleResult: MMA weights, averaged fitted values and the attained
            criterion value. ``weights.converged`` is False when the QP hit
            its iteration cap.
    """
    y = numerics.as_finite(y, "response", ndim=1)
    _check_fits(fits, y.shape[0])
    fitted = fitted_matrix(fits)
    h = y[:, None] - fitted
    b = penalty_vector(fits, omega)
    solution = solve_simplex_qp(SimplexQP(gram=h.T @ h, linear=b))
    if solution.unconverged:
        logger.warning("MMA weights did not converge; using the best iterate")
    return EnsembleResult(
        method=Method.MMA,
        weights=solution,
        fitted=fitted @ solution.weights,
        criterion_value=solution.objective,
    )


def info_criteria(fit: CandidateFit, n: int) -> InformationCriteria:
    """AIC and BIC with ``σ̂² = ‖y - μ̂‖²/n`` and ``tr(P̂)`` as the model size.

    A fit with zero residual norm is reported as saturated with both scores
    at ``-inf``, so that selection prefers it.
    """
    sigma2 = float(fit.residuals @ fit.residuals) / n
    if sigma2 <= np.finfo(float).tiny:
        logger.warning("candidate %s interpolates the response", fit.spec.label())
        return InformationCriteria(aic=-np.inf, bic=-np.inf, saturated=True)
    log_sigma2 = np.log(sigma2)
    return InformationCriteria(
        aic=float(log_sigma2 + 2.0 * fit.trace_hat / n),
        bic=float(log_sigma2 + np.log(n) * fit.trace_hat / n),
    )


def smoothed_weights(scores) -> WeightVector:
    """Weights proportional to ``exp(-score / 2)``, computed after shifting by the minimum."""
    scores = np.asarray(scores, dtype=float)
    if np.any(np.isnan(scores)) or np.any(scores == np.inf):
        raise ContractViolation("information-criterion scores must be finite")
    saturated = scores == -np.inf
    if np.any(saturated):
        return WeightVector.from_weights(saturated / saturated.sum())
    unnormalised = np.exp(-(scores - scores.min()) / 2.0)
    return WeightVector.from_weights(unnormalised / unnormalised.sum())


def selection_weights(scores) -> WeightVector:
    """Vertex at the smallest score; ties go to the smallest index."""
    scores = np.asarray(scores, dtype=float)
    return WeightVector.vertex(scores.size, int(np.argmin(scores)))


def equal_weights(m: int) -> WeightVector:
    return WeightVector.from_weights(np.full(m, 1.0 / m))


def criteria_table(fits: list[CandidateFit]) -> CriteriaTable:
    n = _check_fits(fits)
    criteria = [info_criteria(fit, n) for fit in fits]
    return CriteriaTable(
        aic=np.array([c.aic for c in criteria]),
        bic=np.array([c.bic for c in criteria]),
    )


def run_all_methods(fits: list[CandidateFit], y, methods=ALL_METHODS) -> list[EnsembleResult]:
    """Compute every requested method from the same candidate fits.

    Each result carries the Mallows criterion evaluated at its weights, so the
    methods can be compared on the criterion the MMA weights minimise.
    """
    y = numerics.as_finite(y, "response", ndim=1)
    _check_fits(fits, y.shape[0])
    methods = [Method.parse(m) if isinstance(m, str) else m for m in methods]
    omega = estimate_omega(fits)
    table = criteria_table(fits)
    fitted = fitted_matrix(fits)
    m = len(fits)

    results = []
    for method in methods:
        if method is Method.MMA:
            mma = mallows_weights(fits, y, omega)
            results.append(
                EnsembleResult(method, mma.weights, mma.fitted, mma.criterion_value, table)
            )
            continue
        if method is Method.AIC:
            weights = selection_weights(table.aic)
        elif method is Method.BIC:
            weights = selection_weights(table.bic)
        elif method is Method.SAIC:
            weights = smoothed_weights(table.aic)
        elif method is Method.SBIC:
            weights = smoothed_weights(table.bic)
        else:
            weights = equal_weights(m)
        value = mallows_criterion(weights.weights, fits, y, omega.diagonal)
        weights = WeightVector(
            weights.weights, value, weights.iterations, weights.active_set, weights.converged
        )
        results.append(EnsembleResult(method, weights, fitted @ weights.weights, value, table))
    return results


def oracle_weights(fits: list[CandidateFit], mu) -> WeightVector:
    """Infeasible weights minimising ``‖μ̂(ω) - μ‖²`` over the simplex."""
    mu = numerics.as_finite(mu, "mean", ndim=1)
    _check_fits(fits, mu.shape[0])
    deviation = fitted_matrix(fits) - mu[:, None]
    return solve_simplex_qp(SimplexQP(gram=deviation.T @ deviation, linear=np.zeros(len(fits))))


def predict_candidate(fit: CandidateFit, z_new, scores_new: ScoreMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-sample ``Z θ̂ + f̂(ξ)`` for one candidate.

    ``f̂`` at a new point is the Nadaraya-Watson average of the training
    partial residuals ``y - Z θ̂`` with the training bandwidth. A point outside
    every training kernel window takes the partial residual of its nearest
    training point.

    Returns:
        tuple: ``(predictions, fallback)`` where ``fallback`` flags the
            observations that used the nearest-point rule.
    """
    z_new = numerics.as_finite(z_new, "scalar predictors", ndim=2)
    spec = fit.spec
    xi_new = scores_new.transformed[:, list(spec.xi_cols)]
    if z_new.shape[0] != xi_new.shape[0]:
        raise ContractViolation(
            f"new data have {z_new.shape[0]} scalar rows and {xi_new.shape[0]} score rows"
        )
    weights = product_kernel(xi_new, fit.xi_train, fit.bandwidth)
    totals = weights.sum(axis=1)
    fallback = totals <= np.finfo(float).tiny
    nonparametric = np.empty(xi_new.shape[0])
    ok = ~fallback
    nonparametric[ok] = weights[ok] @ fit.partial_residuals / totals[ok]
    if np.any(fallback):
        distance = ((xi_new[fallback, None, :] - fit.xi_train[None, :, :]) ** 2).sum(axis=2)
        nonparametric[fallback] = fit.partial_residuals[np.argmin(distance, axis=1)]
    parametric = z_new[:, list(spec.z_cols)] @ fit.theta if spec.p else 0.0
    return parametric + nonparametric, fallback


def predict_with_fallback(
    result: EnsembleResult, fits: list[CandidateFit], z_new, scores_new: ScoreMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Weighted out-of-sample predictions and a per-observation fallback mask.

    An observation is flagged when any candidate with positive weight used the
    nearest-point rule for it.
    """
    weights = result.weights.weights
    if weights.shape[0] != len(fits):
        raise ContractViolation(f"{weights.shape[0]} weights for {len(fits)} candidates")
    total = None
    fallback_any = None
    for w, fit in zip(weights, fits):
        if w == 0:
            continue
        values, fallback = predict_candidate(fit, z_new, scores_new)
        total = w * values if total is None else total + w * values
        fallback_any = fallback if fallback_any is None else fallback_any | fallback
    if np.any(fallback_any):
        logger.warning(
            "%s: %d new observations fell outside every kernel window",
            result.method.value,
            int(fallback_any.sum()),
        )
    return total, fallback_any


def predict(result: EnsembleResult, fits: list[CandidateFit], z_new, scores_new: ScoreMatrix) -> np.ndarray:
    """Combine per-candidate out-of-sample predictions with the result's weights."""
    return predict_with_fallback(result, fits, z_new, scores_new)[0]

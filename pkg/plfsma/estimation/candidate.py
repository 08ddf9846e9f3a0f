"""One candidate PLFS model, fitted by partialling out the kernel smoother.

For smoother ``K`` and design ``Z`` the fit is

    Ẑ = (I - K) Z,   θ̂ = argmin ‖(I - K) y - Ẑ θ‖²,   f̂ = K (y - Z θ̂),

so that the fitted values are ``P y`` with ``P = P̄ (I - K) + K`` and ``P̄``
the orthogonal projector onto the columns of ``Ẑ``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from plfsma.core import numerics
from plfsma.core.errors import ContractViolation
from plfsma.estimation.fpca import ScoreMatrix
from plfsma.estimation.kernel import build_smoother, rot_bandwidth
from plfsma.schemas.candidate import CandidateSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateFit:
    spec: CandidateSpec
    theta: np.ndarray
    hat: np.ndarray | None = field(repr=False)
    fitted: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    trace_hat: float
    bandwidth: float
    # kept for out-of-sample prediction
    xi_train: np.ndarray = field(repr=False)
    partial_residuals: np.ndarray = field(repr=False)
    projection: np.ndarray | None = field(default=None, repr=False)
    rank: int = 0
    collinear: bool = False

    @property
    def n(self) -> int:
        return self.fitted.shape[0]

    @property
    def size(self) -> int:
        return self.spec.size


def resolve_bandwidth(spec: CandidateSpec, n: int) -> float:
    if spec.bandwidth == "auto":
        return rot_bandwidth(n, spec.q)
    return float(spec.bandwidth)


def _check_spec(spec: CandidateSpec, z: np.ndarray, scores: ScoreMatrix) -> None:
    if spec.z_cols and max(spec.z_cols) >= z.shape[1]:
        raise ContractViolation(
            f"candidate {spec.label()} uses Z column {max(spec.z_cols) + 1} "
            f"but only {z.shape[1]} are available"
        )
    if max(spec.xi_cols) >= scores.k:
        raise ContractViolation(
            f"candidate {spec.label()} uses score {max(spec.xi_cols) + 1} "
            f"but only {scores.k} were extracted"
        )


def fit_candidate(y, z, scores: ScoreMatrix, spec: CandidateSpec) -> CandidateFit:
    """Fit one candidate and assemble its hat matrix.

    Args:
        y: Response vector of length n.
        z: ``(n, p)`` scalar predictors.
        scores: Scores of the same n subjects.
        spec: Columns and bandwidth of the candidate.

    Returns:
        CandidateFit: Coefficients, dense hat matrix, fitted values and residuals.

    Raises:
        ContractViolation: On dimension mismatches or ``n <= p_m + 1``.
    """
    y = numerics.as_finite(y, "response", ndim=1)
    z = numerics.as_finite(z, "scalar predictors", ndim=2)
    n = y.shape[0]
    if z.shape[0] != n or scores.n != n:
        raise ContractViolation(
            f"row counts differ: y={n}, z={z.shape[0]}, scores={scores.n}"
        )
    _check_spec(spec, z, scores)
    if n <= spec.p + 1:
        raise ContractViolation(f"candidate {spec.label()} needs n > {spec.p + 1}, got n={n}")

    h = resolve_bandwidth(spec, n)
    xi = scores.transformed[:, list(spec.xi_cols)]
    smoother = build_smoother(xi, h, score_cols=spec.xi_cols).entries
    residual_maker = np.eye(n) - smoother

    if spec.p == 0:
        theta = np.zeros(0)
        hat = smoother
        projection, rank, collinear = None, 0, False
    else:
        zm = z[:, list(spec.z_cols)]
        z_tilde = residual_maker @ zm
        projection, rank = numerics.projection(z_tilde)
        collinear = rank < spec.p
        if collinear:
            logger.warning(
                "candidate %s: partialled-out design has rank %d < %d, using pseudo-inverse",
                spec.label(),
                rank,
                spec.p,
            )
        theta = numerics.lstsq(z_tilde, residual_maker @ y)
        hat = projection @ residual_maker + smoother

    fitted = hat @ y
    partial = y - z[:, list(spec.z_cols)] @ theta if spec.p else y.copy()
    logger.debug("candidate %s: h=%.4g tr(P)=%.4f", spec.label(), h, np.trace(hat))
    return CandidateFit(
        spec=spec,
        theta=theta,
        hat=hat,
        fitted=fitted,
        residuals=y - fitted,
        trace_hat=float(np.trace(hat)),
        bandwidth=h,
        xi_train=xi,
        partial_residuals=partial,
        projection=projection,
        rank=rank,
        collinear=collinear,
    )


def fit_candidates(y, z, scores: ScoreMatrix, specs: list[CandidateSpec]) -> list[CandidateFit]:
    return [fit_candidate(y, z, scores, spec) for spec in specs]


def hat_diagnostics(fit: CandidateFit) -> tuple[float, float]:
    """Largest singular value of the hat matrix and the idempotence residual of ``P̄``.

    The residual is ``max |P̄² - P̄|``, and 0 for candidates without a
    parametric part.
    """
    lambda_max = float(np.linalg.norm(fit.hat, ord=2))
    if fit.projection is None:
        return lambda_max, 0.0
    p = fit.projection
    return lambda_max, float(np.max(np.abs(p @ p - p)))

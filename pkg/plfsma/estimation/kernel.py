"""Product-Epanechnikov Nadaraya-Watson smoothers over transformed scores."""
import logging
from dataclasses import dataclass

import numpy as np

from plfsma.core import numerics
from plfsma.core.errors import ContractViolation, NumericalFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmootherMatrix:
    entries: np.ndarray
    bandwidth: float
    score_cols: tuple[int, ...] = ()

    def __matmul__(self, other):
        return self.entries @ other


def epanechnikov(u):
    """Epanechnikov kernel ``0.75 (1 - u²)`` on ``|u| <= 1``, zero outside."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def rot_bandwidth(n: int, q_m: int) -> float:
    """Rule-of-thumb bandwidth ``n^{-1/(1+q_m)}``."""
    return float(n ** (-1.0 / (1.0 + q_m)))


def product_kernel(targets: np.ndarray, sources: np.ndarray, h: float) -> np.ndarray:
    """Unnormalised product-kernel weights between every target and source row.

    Args:
        targets: ``(n_t, q)`` evaluation points.
        sources: ``(n_s, q)`` data points.
        h: Bandwidth shared by all coordinates.

    Returns:
        np.ndarray: ``(n_t, n_s)`` matrix of ``Π_l k((t_l - s_l) / h)``.
    """
    weights = np.ones((targets.shape[0], sources.shape[0]))
    for col in range(targets.shape[1]):
        weights *= epanechnikov((targets[:, col, None] - sources[None, :, col]) / h)
    return weights


def build_smoother(scores, h: float, score_cols=()) -> SmootherMatrix:
    """Row-normalised Nadaraya-Watson matrix over the rows of ``scores``.

    Args:
        scores: ``(n, q_m)`` transformed scores, entries in (0, 1).
        h: Positive bandwidth.
        score_cols: Score columns the matrix was built from (bookkeeping only).

    Returns:
        SmootherMatrix: Row-stochastic ``(n, n)`` weights.

    Raises:
        ContractViolation: On a non-positive bandwidth or malformed scores.
        NumericalFailure: If a row's kernel mass underflows.
    """
    scores = numerics.as_finite(scores, "scores")
    if scores.ndim == 1:
        scores = scores[:, None]
    if not h > 0:
        raise ContractViolation(f"bandwidth must be positive, got {h}")
    weights = product_kernel(scores, scores, h)
    totals = weights.sum(axis=1, keepdims=True)
    if np.any(totals <= np.finfo(float).tiny):
        raise NumericalFailure("smoother row has no kernel mass; self-weight underflowed")
    return SmootherMatrix(entries=weights / totals, bandwidth=float(h), score_cols=tuple(score_cols))

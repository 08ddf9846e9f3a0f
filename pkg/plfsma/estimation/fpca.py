"""Functional principal component analysis for densely observed curves.

Curves are first recovered with a local-linear Epanechnikov smoother, then
the covariance operator is discretised on the grid with trapezoid weights,
eigendecomposed, and every curve is projected on the eigenfunctions to give
raw scores and their Gaussian-CDF transforms.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from plfsma.core import numerics
from plfsma.core.errors import ConfigurationError, ContractViolation, DataFormatError
from plfsma.estimation.kernel import epanechnikov

logger = logging.getLogger(__name__)

AUTO = "auto"
MIN_GRID_POINTS = 4
EIGEN_RTOL = 1e-12
SIGN_TOL = 1e-10
# ndtr saturates to exactly 0 or 1 beyond |z| ~ 8.3
_CDF_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CurveSet:
    grid: np.ndarray
    obs: np.ndarray

    def __post_init__(self):
        grid = numerics.as_finite(self.grid, "grid", ndim=1)
        obs = numerics.as_finite(self.obs, "curve observations")
        if obs.ndim == 1:
            obs = obs[None, :]
        if obs.ndim != 2:
            raise ContractViolation(f"curve observations must be a matrix, got {obs.shape}")
        if grid.size < MIN_GRID_POINTS:
            raise ContractViolation(
                f"curves need at least {MIN_GRID_POINTS} grid points, got {grid.size}"
            )
        if np.any(np.diff(grid) <= 0):
            raise ContractViolation("curve grid must be strictly increasing")
        if obs.shape[1] != grid.size:
            raise ContractViolation(
                f"curve observations have {obs.shape[1]} columns for a grid of {grid.size}"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "obs", obs)

    @property
    def n(self) -> int:
        return self.obs.shape[0]

    def subset(self, rows) -> "CurveSet":
        return CurveSet(self.grid, self.obs[np.asarray(rows)])


@dataclass(frozen=True)
class FpcaBasis:
    grid: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # K x N, one eigenfunction per row
    weights: np.ndarray = field(repr=False)

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)


@dataclass(frozen=True)
class ScoreMatrix:
    raw: np.ndarray
    transformed: np.ndarray

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def k(self) -> int:
        return self.raw.shape[1]

    def subset(self, rows) -> "ScoreMatrix":
        rows = np.asarray(rows)
        return ScoreMatrix(self.raw[rows], self.transformed[rows])


def local_linear_matrix(grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Local-linear smoother matrix ``S`` on ``grid`` so that ``S @ values`` is the smooth.

    Row ``i`` holds the equivalent kernel weights for target ``grid[i]``;
    each row reproduces constants and linear functions exactly.
    """
    offset = grid[None, :] - grid[:, None]
    w = epanechnikov(offset / bandwidth)
    s0 = w.sum(axis=1, keepdims=True)
    s1 = (w * offset).sum(axis=1, keepdims=True)
    s2 = (w * offset**2).sum(axis=1, keepdims=True)
    det = s0 * s2 - s1**2
    if np.any(det <= 0):
        raise ConfigurationError(
            f"presmoothing bandwidth {bandwidth:g} leaves fewer than two points in some window"
        )
    return w * (s2 - offset * s1) / det


def resolve_presmooth_bandwidth(grid: np.ndarray, bandwidth: float | Literal["auto"]) -> float:
    spacing = np.diff(grid)
    if bandwidth == AUTO:
        return float(2.0 * np.median(spacing))
    bandwidth = float(bandwidth)
    if not np.isfinite(bandwidth) or bandwidth <= spacing.min():
        raise ConfigurationError(
            f"presmoothing bandwidth {bandwidth:g} must exceed the minimum grid spacing "
            f"{spacing.min():g}"
        )
    return bandwidth


def recover_curves(raw: CurveSet, presmooth_bandwidth: float | Literal["auto"] = AUTO) -> CurveSet:
    """Replace every observed curve with its local-linear smooth on the same grid.

    Args:
        raw: Noisy curve measurements.
        presmooth_bandwidth: Epanechnikov bandwidth in grid units, or ``"auto"``
            for twice the median grid spacing.

    Returns:
        CurveSet: Smoothed curves on the same grid.

    Raises:
        ConfigurationError: If the bandwidth does not exceed the minimum spacing.
    """
    bandwidth = resolve_presmooth_bandwidth(raw.grid, presmooth_bandwidth)
    smoother = local_linear_matrix(raw.grid, bandwidth)
    logger.debug("presmoothing %d curves with bandwidth %.6g", raw.n, bandwidth)
    return CurveSet(raw.grid, raw.obs @ smoother.T)


def _fix_signs(eigenfunctions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    integrals = eigenfunctions @ weights
    for k, integral in enumerate(integrals):
        if abs(integral) > SIGN_TOL:
            flip = integral < 0
        else:
            row = eigenfunctions[k]
            first = np.flatnonzero(np.abs(row) > SIGN_TOL)
            flip = first.size > 0 and row[first[0]] < 0
        if flip:
            eigenfunctions[k] = -eigenfunctions[k]
    return eigenfunctions


def fit_fpca(curves: CurveSet) -> FpcaBasis:
    """Estimate mean, eigenvalues and L²-orthonormal eigenfunctions.

    The covariance operator is discretised as ``C W`` with ``W`` the
    trapezoid weights and symmetrised as ``W^½ C W^½`` before the
    eigendecomposition. At most ``n - 1`` components are kept, and only
    those with eigenvalue above ``1e-12`` times the largest.

    Raises:
        ContractViolation: If fewer than two curves are given.
    """
    n = curves.n
    if n < 2:
        raise ContractViolation(f"FPCA needs at least 2 curves, got {n}")
    weights = numerics.trapz_weights(curves.grid)
    mean = curves.obs.mean(axis=0)
    centered = curves.obs - mean
    covariance = centered.T @ centered / n
    root_w = np.sqrt(weights)
    values, vectors = numerics.sym_eigen(root_w[:, None] * covariance * root_w[None, :])

    top = values[0] if values.size else 0.0
    keep = values > EIGEN_RTOL * top if top > 0 else np.zeros(values.size, dtype=bool)
    keep[n - 1 :] = False
    values = values[keep]
    eigenfunctions = (vectors[:, keep] / root_w[:, None]).T
    eigenfunctions = _fix_signs(np.ascontiguousarray(eigenfunctions), weights)
    logger.debug("FPCA kept %d components, leading eigenvalue %.6g", values.size, top)
    return FpcaBasis(
        grid=curves.grid,
        mean=mean,
        eigenvalues=values,
        eigenfunctions=eigenfunctions,
        weights=weights,
    )


def score_rank_cap(n: int, alpha: float) -> int:
    """Largest score count allowed by the growth rate ``n^{1/(2+2α)}``."""
    return max(1, int(np.floor(n ** (1.0 / (2.0 + 2.0 * alpha)))))


def transform_scores(raw: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """Map raw scores into (0, 1) with ``Φ(ζ / √λ)``."""
    transformed = numerics.gauss_cdf(raw / np.sqrt(eigenvalues))
    return np.clip(transformed, _CDF_EPS, 1.0 - _CDF_EPS)


def extract_scores(
    basis: FpcaBasis, curves: CurveSet, k_max: int, alpha: float | None = None
) -> ScoreMatrix:
    """Project curves on the first ``k_max`` eigenfunctions.

    Args:
        basis: Fitted basis; ``curves`` must share its grid.
        curves: Recovered curves to score.
        k_max: Number of leading components to score.
        alpha: Optional eigenvalue decay exponent; when given, a warning is
            logged if ``k_max`` exceeds the score-count growth cap.

    Raises:
        ConfigurationError: If ``k_max`` exceeds the retained rank.
        DataFormatError: If the curves live on a different grid.
    """
    ensure_same_grid(basis.grid, curves.grid)
    if k_max < 1 or k_max > basis.n_components:
        raise ConfigurationError(
            f"requested {k_max} scores but the basis has rank {basis.n_components}"
        )
    if alpha is not None and k_max > score_rank_cap(curves.n, alpha):
        logger.warning(
            "extracting %d scores exceeds the growth cap %d for n=%d, alpha=%g",
            k_max,
            score_rank_cap(curves.n, alpha),
            curves.n,
            alpha,
        )
    eigenvalues = basis.eigenvalues[:k_max]
    raw = (curves.obs - basis.mean) @ (basis.eigenfunctions[:k_max] * basis.weights).T
    return ScoreMatrix(raw=raw, transformed=transform_scores(raw, eigenvalues))


def _describe_grid(grid: np.ndarray) -> str:
    return f"[{grid[0]:g} .. {grid[-1]:g}] with {grid.size} points"


def ensure_same_grid(expected: np.ndarray, actual: np.ndarray) -> None:
    """Raise ``DataFormatError`` unless both grids agree point by point."""
    tolerance = 1e-9 * max(1.0, float(np.abs(expected).max()))
    if expected.shape != actual.shape or not np.allclose(actual, expected, rtol=0, atol=tolerance):
        raise DataFormatError(
            f"curve grid {_describe_grid(actual)} does not match basis grid "
            f"{_describe_grid(expected)}"
        )

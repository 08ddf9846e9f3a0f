"""Data-generating designs for the simulation study.

All three designs share the response model ``y = Σ θ_j Z_j + f(ξ) + ε`` with
50 scalar predictors (AR(1) correlation 0.5), a curve predictor built from
a truncated Karhunen-Loève expansion, and transformed scores
``ξ_k = Φ(ζ_k / √λ_k)``.

  Design 1: independent Z; 40 sine components on [0, 1], λ_k = k^{-3/2};
            f = exp(Σ ξ_k / k); homoscedastic noise.
  Design 2: (ζ_1, Z) jointly normal; 20 cosine components on [0, 10],
            λ_k = k^{-2}; f = ξ1 ξ2 + ξ3² + Σ_{k>=4} (ξ_k - ½)/k;
            noise variance η²(u² + 0.01), u ~ U[-1, 1].
  Design 3: Design 1 with the Design 2 correlation and noise variance
            η²(Z_1² + 0.01).

``(ζ_1, Z_1, ..., Z_50)`` are stacked in that order when correlated, so
``corr(ζ_1/√λ_1, Z_j) = 0.5^j``.
"""
import functools
import logging
from dataclasses import dataclass

import numpy as np

from plfsma.core import numerics, settings
from plfsma.data.ingest import Dataset
from plfsma.estimation.fpca import CurveSet
from plfsma.schemas.design import DesignConfig

logger = logging.getLogger(__name__)

N_SCALARS = 50
AR_CORRELATION = 0.5
CALIBRATION_KEY = 2**31


@dataclass(frozen=True)
class DesignShape:
    n_components: int
    domain: tuple[float, float]
    theta: np.ndarray
    eigenvalues: np.ndarray
    correlated: bool
    mean_noise_factor: float


@dataclass(frozen=True)
class SimulatedData:
    y: np.ndarray
    z: np.ndarray
    curves: CurveSet
    mu: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    noise_variance: np.ndarray


def design_shape(design: int) -> DesignShape:
    j = np.arange(1, N_SCALARS + 1, dtype=float)
    if design == 1 or design == 3:
        k = np.arange(1, 41, dtype=float)
        return DesignShape(
            n_components=40,
            domain=(0.0, 1.0),
            theta=j ** (-2.0 / 3.0),
            eigenvalues=k**-1.5,
            correlated=design == 3,
            mean_noise_factor=1.0 if design == 1 else 1.01,
        )
    k = np.arange(1, 21, dtype=float)
    return DesignShape(
        n_components=20,
        domain=(0.0, 10.0),
        theta=j**-0.5,
        eigenvalues=k**-2.0,
        correlated=True,
        mean_noise_factor=1.0 / 3.0 + 0.01,
    )


def eigenfunctions(design: int, grid: np.ndarray) -> np.ndarray:
    """True eigenfunctions evaluated on ``grid``, one per row."""
    shape = design_shape(design)
    k = np.arange(1, shape.n_components + 1, dtype=float)[:, None]
    if design == 2:
        return np.cos(k * np.pi * grid[None, :] / 5.0) / np.sqrt(5.0)
    return np.sqrt(2.0) * np.sin(k * np.pi * grid[None, :])


def design_grid(design: int, grid_size: int) -> np.ndarray:
    low, high = design_shape(design).domain
    return np.linspace(low, high, grid_size)


@functools.lru_cache(maxsize=None)
def _ar_cholesky(dim: int) -> np.ndarray:
    index = np.arange(dim)
    sigma = AR_CORRELATION ** np.abs(index[:, None] - index[None, :])
    return np.linalg.cholesky(sigma)


def regression_function(design: int, xi: np.ndarray) -> np.ndarray:
    if design == 2:
        k = np.arange(4, 21, dtype=float)
        return xi[:, 0] * xi[:, 1] + xi[:, 2] ** 2 + (xi[:, 3:20] - 0.5) @ (1.0 / k)
    k = np.arange(1, 41, dtype=float)
    return np.exp(xi @ (1.0 / k))


def _draw_latent(design: int, n: int, stream: numerics.RandomStream):
    """Scalar predictors, raw scores and the heteroscedasticity driver."""
    shape = design_shape(design)
    k = shape.n_components
    if shape.correlated:
        joint = stream.standard_normal((n, N_SCALARS + 1)) @ _ar_cholesky(N_SCALARS + 1).T
        zeta_first, z = joint[:, :1] * np.sqrt(shape.eigenvalues[0]), joint[:, 1:]
        rest = stream.standard_normal((n, k - 1)) * np.sqrt(shape.eigenvalues[1:])
        zeta = np.hstack([zeta_first, rest])
    else:
        z = stream.standard_normal((n, N_SCALARS)) @ _ar_cholesky(N_SCALARS).T
        zeta = stream.standard_normal((n, k)) * np.sqrt(shape.eigenvalues)
    u = stream.uniform(-1.0, 1.0, size=n) if design == 2 else None
    return z, zeta, u


def _noise_factor(design: int, z: np.ndarray, u: np.ndarray | None) -> np.ndarray:
    if design == 1:
        return np.ones(z.shape[0])
    if design == 2:
        return u**2 + 0.01
    return z[:, 0] ** 2 + 0.01


def _mean_response(design: int, z: np.ndarray, zeta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    shape = design_shape(design)
    xi = numerics.gauss_cdf(zeta / np.sqrt(shape.eigenvalues))
    return z @ shape.theta + regression_function(design, xi), xi


@functools.lru_cache(maxsize=64)
def signal_variance(design: int, seed: int, draws: int | None = None) -> float:
    """``var(μ)`` from one auxiliary draw, cached per (design, seed)."""
    draws = draws or settings.CALIBRATION_DRAWS
    stream = numerics.random_stream(np.random.SeedSequence(seed, spawn_key=(CALIBRATION_KEY,)))
    z, zeta, _ = _draw_latent(design, draws, stream)
    mu, _ = _mean_response(design, z, zeta)
    return float(np.var(mu))


def noise_scale(design: int, r2: float, seed: int, draws: int | None = None) -> float:
    """``η`` such that ``var(μ) / var(y) = r2``.

    ``var(y) = var(μ) + η² E[s]`` with ``s`` the per-observation noise factor,
    so ``η² = var(μ)(1 - r2) / (r2 E[s])``.
    """
    variance = signal_variance(design, seed, draws)
    eta2 = variance * (1.0 - r2) / (r2 * design_shape(design).mean_noise_factor)
    return float(np.sqrt(eta2))


def simulate_design(
    design: int, n: int, eta: float, grid_size: int, stream: numerics.RandomStream
) -> SimulatedData:
    z, zeta, u = _draw_latent(design, n, stream)
    mu, xi = _mean_response(design, z, zeta)
    noise_variance = eta**2 * _noise_factor(design, z, u)
    y = mu + np.sqrt(noise_variance) * stream.standard_normal(n)
    grid = design_grid(design, grid_size)
    clean = zeta @ eigenfunctions(design, grid)
    measured = clean + np.sqrt(settings.MEASUREMENT_ERROR_VARIANCE) * stream.standard_normal(
        clean.shape
    )
    return SimulatedData(
        y=y,
        z=z,
        curves=CurveSet(grid, measured),
        mu=mu,
        xi=xi,
        zeta=zeta,
        noise_variance=noise_variance,
    )


def gen_design(config: DesignConfig, stream: numerics.RandomStream) -> SimulatedData:
    """Draw one sample of size ``config.n`` from the configured design."""
    eta = noise_scale(config.design, config.r2, config.seed)
    return simulate_design(config.design, config.n, eta, config.grid_size, stream)


def realized_r2(design: int, r2: float, seed: int, draws: int, check_seed: int) -> float:
    """Empirical ``var(μ) / var(y)`` on a fresh sample, for calibration checks."""
    eta = noise_scale(design, r2, seed)
    stream = numerics.random_stream(check_seed)
    z, zeta, u = _draw_latent(design, draws, stream)
    mu, _ = _mean_response(design, z, zeta)
    y = mu + eta * np.sqrt(_noise_factor(design, z, u)) * stream.standard_normal(draws)
    return float(np.var(mu) / np.var(y))


def make_dataset(
    design: int, n: int, r2: float, seed: int, grid_size: int = 100, n_scalars: int = 5
) -> Dataset:
    """A synthetic dataset in the ingestion layout, keeping the first ``n_scalars`` Z columns."""
    eta = noise_scale(design, r2, seed)
    data = simulate_design(design, n, eta, grid_size, numerics.random_stream(seed))
    names = tuple(f"Z{j + 1}" for j in range(n_scalars))
    logger.info("generated design %d dataset with n=%d, r2=%.2f", design, n, r2)
    return Dataset(y=data.y, z=data.z[:, :n_scalars], z_names=names, curves=data.curves)

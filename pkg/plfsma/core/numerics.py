"""Shared numerical kernels.

All functions are pure and take/return numpy arrays. Inputs are validated
for shape and finiteness up front so that downstream modules can rely on
clean data; violations raise :class:`ContractViolation`.
"""
import logging

import numpy as np
from scipy import integrate, linalg, special

from plfsma.core.errors import ContractViolation, NumericalFailure

logger = logging.getLogger(__name__)

RandomStream = np.random.Generator

SYMMETRY_TOL = 1e-10
RANK_RTOL = 1e-10


def as_finite(values, name: str = "array", ndim: int | None = None) -> np.ndarray:
    """Convert to a float array and check it is finite.

    Args:
        values: Anything ``np.asarray`` accepts.
        name: Name used in the error message.
        ndim: Required number of dimensions, if any.

    Returns:
        np.ndarray: A float64 view or copy of ``values``.

    Raises:
        ContractViolation: On a dimension mismatch or a NaN/Inf entry.
    """
    arr = np.asarray(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ContractViolation(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite entries")
    return arr


def sym_eigen(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Args:
        a: Square symmetric matrix.

    Returns:
        tuple: ``(eigenvalues, eigenvectors)`` with eigenvalues sorted
            non-increasing and eigenvectors as orthonormal columns.

    Raises:
        ContractViolation: If ``a`` is not square or not symmetric to within
            ``1e-10`` of its largest absolute entry.
        NumericalFailure: If the LAPACK driver does not converge.
    """
    a = as_finite(a, "matrix", ndim=2)
    if a.shape[0] != a.shape[1]:
        raise ContractViolation(f"eigendecomposition needs a square matrix, got {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(scale, 1e-300):
        raise ContractViolation("eigendecomposition needs a symmetric matrix")
    try:
        values, vectors = linalg.eigh(0.5 * (a + a.T))
    except linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"symmetric eigensolver did not converge for a {a.shape[0]}x{a.shape[0]} matrix"
        ) from exc
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def lstsq(a, y) -> np.ndarray:
    """Least-squares coefficients, minimum-norm when ``a`` is rank deficient."""
    a = as_finite(a, "design", ndim=2)
    y = as_finite(y, "response", ndim=1)
    n, p = a.shape
    if y.shape[0] != n:
        raise ContractViolation(f"design has {n} rows but response has {y.shape[0]}")
    if n < p:
        raise ContractViolation(f"least squares needs n >= p, got n={n}, p={p}")
    if p == 0:
        return np.zeros(0)
    coef, *_ = linalg.lstsq(a, y, cond=RANK_RTOL)
    return coef


def projection(a, rtol: float = RANK_RTOL) -> tuple[np.ndarray, int]:
    """Orthogonal projector onto the column space of ``a``.

    Singular values below ``rtol`` times the largest are treated as zero,
    which gives the pseudo-inverse projector for collinear designs.

    Returns:
        tuple: ``(projector, rank)``.
    """
    a = as_finite(a, "design", ndim=2)
    n, p = a.shape
    if p == 0:
        return np.zeros((n, n)), 0
    u, s, _ = linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, n)), 0
    rank = int(np.sum(s > rtol * s[0]))
    basis = u[:, :rank]
    return basis @ basis.T, rank


def gauss_cdf(x):
    """Standard Gaussian CDF, elementwise."""
    return special.ndtr(as_finite(x, "argument"))


def _check_grid(grid, values=None) -> tuple[np.ndarray, np.ndarray | None]:
    grid = as_finite(grid, "grid", ndim=1)
    if grid.size >= 2 and np.any(np.diff(grid) <= 0):
        raise ContractViolation("grid must be strictly increasing")
    if values is not None:
        values = as_finite(values, "values")
        if values.shape[-1] != grid.shape[0]:
            raise ContractViolation(
                f"grid has {grid.shape[0]} points but values have {values.shape[-1]}"
            )
    return grid, values


def trapz_weights(grid) -> np.ndarray:
    """Trapezoid quadrature weights, so that ``weights @ values`` integrates ``values``."""
    grid, _ = _check_grid(grid)
    if grid.size < 2:
        return np.zeros_like(grid)
    spacing = np.diff(grid)
    weights = np.zeros_like(grid)
    weights[:-1] += 0.5 * spacing
    weights[1:] += 0.5 * spacing
    return weights


def trapz(grid, values):
    """Trapezoid integral of ``values`` over ``grid`` (along the last axis)."""
    grid, values = _check_grid(grid, values)
    return integrate.trapezoid(values, x=grid, axis=-1)


def random_stream(seed: int | np.random.SeedSequence) -> RandomStream:
    """A PCG64 generator; equal seeds give equal draw sequences on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Child seed sequences for ``count`` independent workers.

    Child ``i`` is ``SeedSequence(seed).spawn(count)[i]``; it depends only on
    the master seed and ``i``, so results do not depend on how work is
    scheduled.
    """
    return np.random.SeedSequence(seed).spawn(count)


def derive_streams(seed: int, count: int) -> list[RandomStream]:
    return [random_stream(child) for child in derive_seeds(seed, count)]

"""Quadratic programs on the unit simplex.

Minimises ``ωᵀGω + 2bᵀω`` subject to ``1ᵀω = 1`` and ``ω >= 0``. The
solver runs projected gradient with Barzilai-Borwein steps (backtracked so
that the objective never increases), then polishes the result with a
primal active-set pass on the support to reach tight KKT accuracy.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from plfsma.core import numerics
from plfsma.core.errors import ContractViolation

logger = logging.getLogger(__name__)

PSD_RTOL = 1e-8
ZERO_WEIGHT = 1e-14


@dataclass(frozen=True)
class SimplexQP:
    gram: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        gram = numerics.as_finite(self.gram, "gram", ndim=2)
        linear = numerics.as_finite(self.linear, "linear term", ndim=1)
        m = linear.shape[0]
        if gram.shape != (m, m):
            raise ContractViolation(f"gram has shape {gram.shape}, expected ({m}, {m})")
        if m == 0:
            raise ContractViolation("a simplex QP needs at least one coordinate")
        scale = max(np.max(np.abs(gram)), 1e-300)
        if np.max(np.abs(gram - gram.T)) > 1e-10 * scale:
            raise ContractViolation("gram matrix is not symmetric")
        gram = 0.5 * (gram + gram.T)
        values, vectors = numerics.sym_eigen(gram)
        if values[-1] < 0:
            if values[-1] < -PSD_RTOL * max(values[0], 0.0):
                raise ContractViolation(
                    f"gram matrix is indefinite: smallest eigenvalue {values[-1]:.3g}"
                )
            gram = (vectors * np.clip(values, 0.0, None)) @ vectors.T
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "linear", linear)

    @property
    def size(self) -> int:
        return self.linear.shape[0]

    def objective(self, w: np.ndarray) -> float:
        return float(w @ self.gram @ w + 2.0 * self.linear @ w)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * (self.gram @ w + self.linear)


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    objective: float
    iterations: int = 0
    active_set: tuple[int, ...] = ()
    converged: bool = True
    objective_path: tuple[float, ...] = field(default=(), repr=False)

    @property
    def unconverged(self) -> bool:
        return not self.converged

    @classmethod
    def vertex(cls, size: int, index: int, objective: float = float("nan")) -> "WeightVector":
        weights = np.zeros(size)
        weights[index] = 1.0
        active = tuple(i for i in range(size) if i != index)
        return cls(weights=weights, objective=objective, active_set=active)

    @classmethod
    def from_weights(cls, weights, objective: float = float("nan")) -> "WeightVector":
        weights = np.asarray(weights, dtype=float)
        active = tuple(int(i) for i in np.flatnonzero(weights == 0))
        return cls(weights=weights, objective=objective, active_set=active)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-based)."""
    m = v.shape[0]
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, m + 1)
    rho = np.flatnonzero(u - cumulative / index > 0)[-1]
    tau = cumulative[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def kkt_residual(problem: SimplexQP, w: np.ndarray) -> float:
    """Scaled KKT violation; zero at an exact minimiser."""
    g = problem.gradient(w)
    support = w > ZERO_WEIGHT
    multiplier = g[support].mean()
    stationarity = np.max(np.abs(g[support] - multiplier))
    dual = np.max(np.maximum(multiplier - g[~support], 0.0)) if np.any(~support) else 0.0
    return float(max(stationarity, dual) / (1.0 + np.max(np.abs(g))))


def _normalise(w: np.ndarray) -> np.ndarray:
    w = np.where(w > ZERO_WEIGHT, w, 0.0)
    return w / w.sum()


def _equality_step(problem: SimplexQP, w: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Minimiser over the affine hull of the free coordinates (others fixed at 0)."""
    idx = np.flatnonzero(free)
    k = idx.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = problem.gram[np.ix_(idx, idx)]
    kkt[:k, k] = -1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([-problem.linear[idx], [1.0]])
    solution, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    target = np.zeros_like(w)
    target[idx] = solution[:k]
    return target


def _active_set_polish(problem: SimplexQP, w: np.ndarray, tol: float, max_iter: int):
    """Primal active-set iterations started from a feasible ``w``."""
    free = w > ZERO_WEIGHT
    current = problem.objective(w)
    path = []
    for iteration in range(max_iter):
        target = _equality_step(problem, w, free)
        direction = target - w
        if np.max(np.abs(direction)) > 1e-15:
            shrinking = (direction < 0) & free
            step = 1.0
            blocking = -1
            if np.any(shrinking):
                ratios = np.full_like(w, np.inf)
                ratios[shrinking] = w[shrinking] / -direction[shrinking]
                blocking = int(np.argmin(ratios))
                step = min(1.0, ratios[blocking])
            candidate = w + step * direction
            candidate[~free] = 0.0
            if step < 1.0:
                candidate[blocking] = 0.0
                free[blocking] = False
            candidate = _normalise(np.maximum(candidate, 0.0))
            value = problem.objective(candidate)
            if value > current:
                break
            w, current = candidate, value
            path.append(current)
            if step < 1.0:
                continue
        g = problem.gradient(w)
        support = w > ZERO_WEIGHT
        multiplier = g[support].mean()
        slack = g - multiplier
        slack[support] = np.inf
        entering = int(np.argmin(slack))
        scale = 1.0 + np.max(np.abs(g))
        if slack[entering] >= -tol * scale:
            return w, iteration + 1, path
        free = support.copy()
        free[entering] = True
    return w, max_iter, path


def solve_simplex_qp(problem: SimplexQP, tol: float = 1e-10, max_iter: int | None = None) -> WeightVector:
    """Minimise ``ωᵀGω + 2bᵀω`` over the unit simplex.

    Args:
        problem: Gram matrix and linear term.
        tol: Scaled KKT tolerance.
        max_iter: Iteration cap; defaults to ``10 M² + 1000``.

    Returns:
        WeightVector: Feasible weights. If the cap is hit before the KKT
            conditions hold, the best iterate is returned with
            ``converged=False``.
    """
    m = problem.size
    if max_iter is None:
        max_iter = 10 * m * m + 1000
    if m == 1:
        w = np.ones(1)
        value = problem.objective(w)
        return WeightVector(w, value, 0, (), True, (value,))

    w = np.full(m, 1.0 / m)
    value = problem.objective(w)
    path = [value]
    g = problem.gradient(w)
    lipschitz = 2.0 * max(np.linalg.norm(problem.gram, 2), 1e-12)
    step = 1.0 / lipschitz
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        trial_step = step
        while True:
            candidate = project_simplex(w - trial_step * g)
            candidate_value = problem.objective(candidate)
            if candidate_value <= value + 1e-15 * (1.0 + abs(value)) or trial_step < 1e-20:
                break
            trial_step *= 0.5
        if candidate_value > value:
            candidate, candidate_value = w, value
        new_g = problem.gradient(candidate)
        s = candidate - w
        r = new_g - g
        w, value, g = candidate, candidate_value, new_g
        path.append(value)
        if kkt_residual(problem, w) <= tol or np.max(np.abs(s)) < 1e-14:
            break
        curvature = s @ r
        step = (s @ s) / curvature if curvature > 0 else 1.0 / lipschitz

    polished, polish_iter, polish_path = _active_set_polish(
        problem, w.copy(), tol, max(max_iter - iterations, m + 1)
    )
    iterations += polish_iter
    if problem.objective(polished) <= value:
        w, value = polished, problem.objective(polished)
        path.extend(polish_path)
    w = _normalise(w)
    value = problem.objective(w)
    converged = kkt_residual(problem, w) <= max(tol, 1e-12)
    if not converged:
        logger.warning(
            "simplex QP stopped after %d iterations with KKT residual %.3g",
            iterations,
            kkt_residual(problem, w),
        )
    active = tuple(int(i) for i in np.flatnonzero(w == 0))
    return WeightVector(w, value, iterations, active, converged, tuple(path))

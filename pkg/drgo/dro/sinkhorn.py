import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .exceptions import SinkhornConvergenceError, WeightDomainError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 10_000
DEFAULT_TOL = 1e-9
SCALING_FACTOR = 0.5


@dataclass(frozen=True)
class PointCloud:
    """Discrete distribution: support points with probability weights"""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, points: np.ndarray) -> "PointCloud":
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return cls(points=points, weights=np.full(len(points), 1.0 / len(points)))


@dataclass(frozen=True)
class SinkhornResult:
    """Entropic optimal transport solution

    `distance` = `transport_cost` + `regularization`, where the regularization is
    lambda * KL(plan || p x q).
    """

    distance: float
    transport_cost: float
    regularization: float
    plan: np.ndarray
    iterations: int
    residual: float

    def __float__(self) -> float:
        return self.distance


def _as_cloud(cloud) -> PointCloud:
    if isinstance(cloud, PointCloud):
        points, weights = cloud.points, cloud.weights
    else:
        points, weights = cloud
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(points) != len(weights):
        raise WeightDomainError(f"{len(points)} support points but {len(weights)} weights")
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-8):
        raise WeightDomainError(f"weights must be non-negative and sum to 1, got sum {weights.sum()}")
    return PointCloud(points=points, weights=weights)


def cost_matrix(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Squared Euclidean cost between every pair of support points"""
    return cdist(source, target, "sqeuclidean")


def sinkhorn_plan(
    p: np.ndarray,
    q: np.ndarray,
    cost: np.ndarray,
    lam: float,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> SinkhornResult:
    """Solve min <C, plan> + lam * KL(plan || p x q) over couplings of p and q

    Log-domain Sinkhorn-Knopp with geometric annealing of the regularization from the cost scale
    down to `lam`; potentials are carried from one stage to the next. Zero-mass support points are
    dropped before solving and get empty rows or columns in the plan.

    Raises
    ------
    SinkhornConvergenceError
        When the row marginal violation (L1) is still above `tol` after `max_iter` updates at `lam`
    """
    if lam <= 0:
        raise WeightDomainError(f"regularization must be positive, got {lam}")
    rows, cols = np.flatnonzero(p > 0), np.flatnonzero(q > 0)
    a, b, c = p[rows], q[cols], cost[np.ix_(rows, cols)]
    log_a, log_b = np.log(a), np.log(b)

    f = np.zeros(len(a))
    g = np.zeros(len(b))
    stages = [lam]
    while stages[-1] < max(float(c.max()), lam):
        stages.append(stages[-1] / SCALING_FACTOR)
    stages.reverse()

    iterations = 0
    residual = np.inf
    for stage, reg in enumerate(stages):
        final = stage == len(stages) - 1
        budget = max_iter if final else max(1, max_iter // 100)
        scaled = -c / reg
        for _ in range(budget):
            f = -logsumexp(scaled + (g + log_b)[None, :], axis=1)
            g = -logsumexp(scaled + (f + log_a)[:, None], axis=0)
            iterations += 1
            log_plan = f[:, None] + g[None, :] + log_a[:, None] + log_b[None, :] + scaled
            residual = float(np.abs(np.exp(logsumexp(log_plan, axis=1)) - a).sum())
            if residual < tol:
                break
    if residual >= tol:
        raise SinkhornConvergenceError(residual=residual, iterations=iterations)

    plan_reduced = np.exp(log_plan)
    transport = float((plan_reduced * c).sum())
    # plan / (p x q) = exp(f + g - C / lam)
    regularization = float(lam * (plan_reduced * (f[:, None] + g[None, :] + scaled)).sum())
    plan = np.zeros_like(cost)
    plan[np.ix_(rows, cols)] = plan_reduced
    return SinkhornResult(
        distance=transport + regularization,
        transport_cost=transport,
        regularization=regularization,
        plan=plan,
        iterations=iterations,
        residual=residual,
    )


def sinkhorn_distance(
    source,
    target,
    lam: float,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    cost: Optional[np.ndarray] = None,
) -> SinkhornResult:
    """Entropic transport distance between two weighted point sets under squared Euclidean cost

    Parameters
    ----------
    source, target : PointCloud or (points, weights)
        weights on each side must sum to 1
    lam : float
        regularization strength, > 0
    max_iter : int
        iteration budget at the target regularization
    tol : float
        L1 marginal violation at which iterations stop
    cost : np.ndarray, optional
        precomputed cost matrix

    Raises
    ------
    SinkhornConvergenceError
        When the marginals aren't matched within `tol` after `max_iter` iterations
    WeightDomainError
        When weights aren't a probability vector or lam <= 0
    """
    source, target = _as_cloud(source), _as_cloud(target)
    if cost is None:
        cost = cost_matrix(source.points, target.points)
    return sinkhorn_plan(source.weights, target.weights, cost, lam, max_iter=max_iter, tol=tol)

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import softmax, xlogy

from .exceptions import InfeasibleRadiusError, WeightDomainError
from .nominal import NominalDistribution
from .sinkhorn import DEFAULT_TOL, PointCloud, SinkhornResult, sinkhorn_distance

logger = logging.getLogger(__name__)

KL_INFINITE = math.inf
BISECTION_STEPS = 40
TRAJECTORY_COLUMNS = ("epoch", "cluster_id", "weight", "group_loss")


@dataclass(frozen=True)
class GroupLosses:
    """Mean loss per cluster over one batch; clusters absent from the batch hold 0 and present=False"""

    values: np.ndarray
    present: np.ndarray
    counts: np.ndarray

    def triplet_coefficients(self, weights: np.ndarray, clusters: np.ndarray) -> np.ndarray:
        """Per-triplet factors c_j with sum_j c_j * loss_j == sum_i w_i * L_i"""
        return weights[clusters] / np.maximum(self.counts[clusters], 1)


def group_losses(losses: np.ndarray, users: np.ndarray, assignment: np.ndarray, n_clusters: int) -> GroupLosses:
    """Average per-triplet losses within the cluster of each triplet's user

    Parameters
    ----------
    losses : np.ndarray
        one loss per triplet
    users : np.ndarray
        user of every triplet
    assignment : np.ndarray
        cluster of every user
    n_clusters : int
        K
    """
    losses = np.asarray(losses, dtype=np.float64).reshape(-1)
    clusters = np.asarray(assignment)[np.asarray(users, dtype=np.int64)]
    counts = np.bincount(clusters, minlength=n_clusters)
    sums = np.bincount(clusters, weights=losses, minlength=n_clusters)
    present = counts > 0
    values = np.zeros(n_clusters)
    values[present] = sums[present] / counts[present]
    return GroupLosses(values=values, present=present, counts=counts)


def check_simplex(weights: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or not weights.size or np.any(weights < 0) or abs(weights.sum() - 1.0) > atol:
        raise WeightDomainError(f"weights are not a probability vector: {weights}")
    return weights


def entropy(weights: np.ndarray) -> float:
    """Shannon entropy -sum w log w with 0 log 0 = 0"""
    return float(-xlogy(weights, weights).sum())


def tempered_weights(losses: np.ndarray, beta: float) -> np.ndarray:
    """Maximizer of sum w L - beta * sum w log w over the simplex: softmax(L / beta)

    beta = 0 is the limit: uniform over the largest losses.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if beta < 0:
        raise WeightDomainError(f"entropy coefficient must be non-negative, got {beta}")
    if beta == 0:
        top = losses == losses.max()
        return top / top.sum()
    return softmax(losses / beta)


@dataclass(frozen=True)
class WeightUpdate:
    """Outcome of one worst-case weight computation

    Attributes
    ----------
    weights : np.ndarray
        group weights on the simplex
    candidate : np.ndarray
        unconstrained maximizer softmax(L / beta)
    mixing : float
        share of the candidate in the returned weights, 1.0 when it was feasible
    distance : float, optional
        transport distance of the returned weights, None when the ball is unbounded
    feasible : bool
        False when uniform weights already violate the radius and uniform was returned
    """

    weights: np.ndarray
    candidate: np.ndarray
    mixing: float
    distance: Optional[float]
    feasible: bool = True

    @property
    def projected(self) -> bool:
        return self.mixing < 1.0


def worst_case_weights(
    losses: np.ndarray,
    beta: float,
    rho: float,
    nominal: Optional[NominalDistribution] = None,
    centroids: Optional[np.ndarray] = None,
    lam: float = 0.05,
    tol: float = DEFAULT_TOL,
    strict: bool = False,
    prev_w: Optional[np.ndarray] = None,
) -> WeightUpdate:
    """Entropy-regularized worst-case group weights inside a Sinkhorn ball

    The candidate softmax(L / beta) is returned when its transport distance from the nominal
    distribution is within `rho`. Otherwise the weights move along (1 - tau) * uniform + tau * candidate
    and bisection finds the largest feasible tau.

    Parameters
    ----------
    losses : np.ndarray
        group losses L, length K
    beta : float
        entropy coefficient, >= 0
    rho : float
        radius of the ball, >= 0; math.inf disables the constraint
    nominal : NominalDistribution, optional
        centre of the ball, required for a finite radius
    centroids : np.ndarray, optional
        (K, d) support of the group distribution, required for a finite radius
    lam : float
        Sinkhorn regularization
    tol : float
        Sinkhorn marginal tolerance
    strict : bool
        raise instead of falling back to uniform when uniform is infeasible
    prev_w : np.ndarray, optional
        weights of the previous step; checked and logged against the new weights only, the update is
        closed form and does not depend on them

    Raises
    ------
    InfeasibleRadiusError
        When `strict` and uniform weights already violate the radius
    """
    losses = np.asarray(losses, dtype=np.float64).reshape(-1)
    if rho < 0:
        raise WeightDomainError(f"radius must be non-negative, got {rho}")
    if prev_w is not None and len(check_simplex(prev_w)) != len(losses):
        raise WeightDomainError(f"{len(prev_w)} previous weights for {len(losses)} groups")
    update = _worst_case_update(losses, beta, rho, nominal, centroids, lam, tol, strict)
    if prev_w is not None:
        logger.debug(f"Group weights moved by {np.abs(update.weights - prev_w).sum():.3e} (L1)")
    return update


def _worst_case_update(
    losses: np.ndarray,
    beta: float,
    rho: float,
    nominal: Optional[NominalDistribution],
    centroids: Optional[np.ndarray],
    lam: float,
    tol: float,
    strict: bool,
) -> WeightUpdate:
    candidate = tempered_weights(losses, beta)
    if math.isinf(rho):
        return WeightUpdate(weights=candidate, candidate=candidate, mixing=1.0, distance=None)
    if nominal is None or centroids is None:
        raise WeightDomainError("a finite radius needs the nominal distribution and the group centroids")

    uniform = np.full(len(losses), 1.0 / len(losses))
    source = PointCloud(points=nominal.embeddings, weights=nominal.weights)

    def distance(weights: np.ndarray) -> SinkhornResult:
        return sinkhorn_distance(source, PointCloud(points=centroids, weights=weights), lam, tol=tol)

    candidate_distance = distance(candidate).distance
    if candidate_distance <= rho:
        return WeightUpdate(weights=candidate, candidate=candidate, mixing=1.0, distance=candidate_distance)

    uniform_distance = distance(uniform).distance
    if uniform_distance > rho:
        if strict:
            raise InfeasibleRadiusError(distance=uniform_distance, radius=rho)
        logger.warning(
            "Uniform group weights violate the transport radius, falling back to uniform",
            extra={"uniform_distance": uniform_distance, "radius": rho},
        )
        return WeightUpdate(weights=uniform, candidate=candidate, mixing=0.0, distance=uniform_distance, feasible=False)

    low, high, low_distance = 0.0, 1.0, uniform_distance
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        middle_distance = distance((1.0 - middle) * uniform + middle * candidate).distance
        if middle_distance <= rho:
            low, low_distance = middle, middle_distance
        else:
            high = middle
    weights = (1.0 - low) * uniform + low * candidate
    return WeightUpdate(weights=weights / weights.sum(), candidate=candidate, mixing=low, distance=low_distance)


def entropy_grad(weights: np.ndarray) -> np.ndarray:
    """Gradient -log w + 1 of the entropy regularizer, coordinate-wise

    Raises
    ------
    WeightDomainError
        When a weight is zero or negative
    """
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise WeightDomainError("entropy gradient needs strictly positive weights")
    return -np.log(weights) + 1.0


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p / q) with 0 log(0 / q) = 0

    Returns KL_INFINITE when p puts mass where q has none.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape != q.shape:
        raise WeightDomainError(f"distributions on different index sets: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return KL_INFINITE
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def kl_dro_weights(losses: np.ndarray, radius: float) -> np.ndarray:
    """Maximize sum w L subject to KL(w || uniform) <= radius

    The maximizer is an exponential tilt w proportional to exp(eta * L); eta is found by root
    bracketing so that the divergence equals the radius. Returns the tie-split one-hot on the largest
    losses when even that is within the radius.
    """
    losses = np.asarray(losses, dtype=np.float64).reshape(-1)
    if radius < 0:
        raise WeightDomainError(f"radius must be non-negative, got {radius}")
    n_groups = len(losses)
    uniform = np.full(n_groups, 1.0 / n_groups)
    spread = losses.max() - losses.min()
    if radius == 0 or spread <= 0:
        return uniform

    top = losses == losses.max()
    if kl_divergence(top / top.sum(), uniform) <= radius:
        return top / top.sum()

    centred = (losses - losses.max()) / spread

    def gap(eta: float) -> float:
        return kl_divergence(softmax(eta * centred), uniform) - radius

    high = 1.0
    while gap(high) < 0:
        high *= 2.0
    eta = brentq(gap, 0.0, high, xtol=1e-14, rtol=1e-14)
    return softmax(eta * centred)


def kl_blowup_demo(n_pairs: int = 50, support_size: int = 5, seed: int = 0, lam: float = 0.05) -> List[Dict[str, Any]]:
    """KL divergence against Sinkhorn distance on pairs of distributions with disjoint supports

    Each pair places `support_size` random points for P and as many for Q in the plane; on the shared
    index set of all 2 * support_size points, P and Q never overlap.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for pair in range(n_pairs):
        points = rng.normal(size=(2 * support_size, 2))
        p = np.concatenate([rng.dirichlet(np.ones(support_size)), np.zeros(support_size)])
        q = np.concatenate([np.zeros(support_size), rng.dirichlet(np.ones(support_size))])
        transport = sinkhorn_distance(
            PointCloud(points[:support_size], p[:support_size]),
            PointCloud(points[support_size:], q[support_size:]),
            lam,
        )
        rows.append({"pair": pair, "kl": kl_divergence(p, q), "sinkhorn": transport.distance})
    return rows


def write_weight_trajectory(path: Union[str, Path], rows: Iterable[Dict[str, Any]]) -> Path:
    """CSV with columns epoch, cluster_id, weight, group_loss"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as stream:
        writer = csv.DictWriter(stream, fieldnames=TRAJECTORY_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _format(row[key]) for key in TRAJECTORY_COLUMNS})
    return path


def _format(value: Any) -> Any:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else value

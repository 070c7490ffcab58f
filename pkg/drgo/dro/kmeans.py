import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from .exceptions import ClusteringError

logger = logging.getLogger(__name__)

KMEANS_RESTARTS = 4


@dataclass(frozen=True)
class UncertaintySet:
    """Finite groups of users found by k-means over their latent rows

    Attributes
    ----------
    centroids : np.ndarray
        (K, d) cluster centres
    assignment : np.ndarray
        cluster of every user
    counts : np.ndarray
        users per cluster, sums to the number of users
    inertia : float
        sum of squared distances to the assigned centroid
    n_iter : int
        Lloyd iterations of the kept restart
    """

    centroids: np.ndarray
    assignment: np.ndarray
    counts: np.ndarray
    inertia: float
    n_iter: int = 0

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)


def _repair_empty(points: np.ndarray, assignment: np.ndarray, centroids: np.ndarray, distances: np.ndarray) -> None:
    """Give every empty cluster the point of the largest cluster that lies farthest from its centre"""
    n_clusters = len(centroids)
    for empty in np.flatnonzero(np.bincount(assignment, minlength=n_clusters) == 0):
        counts = np.bincount(assignment, minlength=n_clusters)
        largest = int(np.argmax(counts))
        if counts[largest] < 2:
            break
        members = np.flatnonzero(assignment == largest)
        farthest = members[np.argmax(distances[members])]
        assignment[farthest] = empty
        distances[farthest] = 0.0
        centroids[empty] = points[farthest]


def kmeans(
    embeddings: np.ndarray, n_clusters: int, max_iter: int = 100, seed: Union[int, np.random.Generator] = 0
) -> UncertaintySet:
    """Lloyd iterations from k-means++ starts, best of `KMEANS_RESTARTS`

    Runs until assignments stop changing or `max_iter`. Each Lloyd step cannot raise the inertia, and a
    fixed seed fixes the starts, so the inertia is non-increasing in `max_iter`. Clusters left empty
    (duplicate points) are refilled with the farthest point of the largest cluster. That point moves to
    distance zero and every other point keeps its centroid, so the refill only lowers the inertia.

    Raises
    ------
    ClusteringError
        When n_clusters is below 1 or above the number of points
    """
    points = np.asarray(embeddings, dtype=np.float64)
    if points.ndim != 2:
        raise ClusteringError(f"expected a (n, d) matrix, got shape {points.shape}")
    if not 1 <= n_clusters <= len(points):
        raise ClusteringError(f"cannot form {n_clusters} clusters from {len(points)} points")
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**31 - 1))

    model = KMeans(
        n_clusters=n_clusters,
        init="k-means++",
        n_init=KMEANS_RESTARTS,
        max_iter=max_iter,
        tol=0.0,
        algorithm="lloyd",
        random_state=seed,
    ).fit(points)
    if model.n_iter_ >= max_iter:
        logger.debug(f"k-means stopped at max_iter={max_iter} before assignments settled")

    centroids = np.array(model.cluster_centers_, dtype=np.float64)
    assignment = np.asarray(model.labels_, dtype=np.int64).copy()
    nearest = cdist(points, centroids, "sqeuclidean")[np.arange(len(points)), assignment]
    _repair_empty(points, assignment, centroids, nearest)

    return UncertaintySet(
        centroids=centroids,
        assignment=assignment,
        counts=np.bincount(assignment, minlength=n_clusters),
        inertia=float(nearest.sum()),
        n_iter=int(model.n_iter_),
    )

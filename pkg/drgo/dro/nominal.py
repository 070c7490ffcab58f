import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NominalSelectionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NominalDistribution:
    """Uniform distribution over the latent rows of the most central nodes

    `node_indices` is ordered by descending centrality, ties by ascending node index.
    """

    node_indices: np.ndarray
    embeddings: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.node_indices)

    def with_embeddings(self, all_embeddings: np.ndarray) -> "NominalDistribution":
        """Same node set, rows taken from a fresh (N, d) latent matrix"""
        return NominalDistribution(
            node_indices=self.node_indices,
            embeddings=np.asarray(all_embeddings, dtype=np.float64)[self.node_indices],
            weights=self.weights,
        )


def select_central_nodes(centrality: np.ndarray, top_pct: float) -> np.ndarray:
    """Indices of the ceil(top_pct% * N) most central nodes

    Raises
    ------
    NominalSelectionError
        When top_pct is outside (0, 100] or there are no nodes
    """
    centrality = np.asarray(centrality, dtype=np.float64).reshape(-1)
    if not 0.0 < top_pct <= 100.0:
        raise NominalSelectionError(f"top_pct must lie in (0, 100], got {top_pct}")
    if not centrality.size:
        raise NominalSelectionError("no nodes to select a nominal distribution from")

    count = min(centrality.size, math.ceil(top_pct * centrality.size / 100.0 - 1e-9))
    order = np.lexsort((np.arange(centrality.size), -centrality))
    return order[:count]


def build_nominal(centrality: np.ndarray, embeddings: np.ndarray, top_pct: float) -> NominalDistribution:
    """Nominal distribution over the top `top_pct` percent of nodes by centrality

    Parameters
    ----------
    centrality : np.ndarray
        betweenness of every node
    embeddings : np.ndarray
        (N, d) denoised latent rows, same node order as `centrality`
    top_pct : float
        percentage in (0, 100]
    """
    indices = select_central_nodes(centrality, top_pct)
    logger.debug(f"Nominal distribution over {len(indices)} of {len(centrality)} nodes")
    return NominalDistribution(
        node_indices=indices,
        embeddings=np.asarray(embeddings, dtype=np.float64)[indices],
        weights=np.full(len(indices), 1.0 / len(indices)),
    )

import logging
from typing import Union

import numpy as np
import scipy.sparse as sp

from .graph import InteractionGraph

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 256


def betweenness_from_adjacency(adjacency: Union[sp.spmatrix, np.ndarray], block_size: int = DEFAULT_BLOCK_SIZE):
    """Exact betweenness of an undirected, unweighted graph (Brandes accumulation)

    Sources are processed in blocks: a level-synchronous breadth-first search counts shortest paths
    (sigma) for every (source, node) pair of the block at once, then dependencies are accumulated
    level by level from the deepest one back to the sources:

        delta[s, v] = sum over successors w of v: sigma[s, v] / sigma[s, w] * (1 + delta[s, w])

    Both passes are sparse-dense products with the adjacency matrix. Every unordered pair is seen
    from both ends, hence the final halving. Pairs in different components contribute nothing.

    Parameters
    ----------
    adjacency : sparse matrix or ndarray
        symmetric 0/1 adjacency with zero diagonal
    block_size : int
        number of sources processed together; trades memory (block_size x n floats) for speed

    Returns
    -------
    np.ndarray
        score per node, c_v = sum over pairs s != t, v not in {s, t} of sigma(s, t | v) / sigma(s, t)
    """
    adjacency = sp.csr_matrix(adjacency, dtype=float)
    n = adjacency.shape[0]
    scores = np.zeros(n)

    for first in range(0, n, block_size):
        sources = np.arange(first, min(first + block_size, n))
        rows = np.arange(sources.size)
        depth = np.full((sources.size, n), -1, dtype=np.int64)
        sigma = np.zeros((sources.size, n))
        depth[rows, sources] = 0
        sigma[rows, sources] = 1.0

        frontier = sigma.copy()
        level = 0
        while True:
            reached = np.asarray((adjacency @ frontier.T).T)
            reached[depth >= 0] = 0.0
            if not reached.any():
                break
            level += 1
            found = reached > 0
            depth[found] = level
            sigma[found] = reached[found]
            frontier = np.where(found, sigma, 0.0)

        delta = np.zeros_like(sigma)
        for current in range(level, 0, -1):
            at_level = depth == current
            coefficient = np.zeros_like(sigma)
            coefficient[at_level] = (1.0 + delta[at_level]) / sigma[at_level]
            pulled = np.asarray((adjacency @ coefficient.T).T)
            parents = depth == current - 1
            delta[parents] += sigma[parents] * pulled[parents]

        delta[rows, sources] = 0.0
        scores += delta.sum(axis=0)

    logger.debug(f"Betweenness computed for {n} nodes in blocks of {block_size}")
    return scores / 2.0


def betweenness_centrality(graph: InteractionGraph, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    """Betweenness of every node of the bipartite graph; users first, then items at n_users + i"""
    return betweenness_from_adjacency(graph.adjacency, block_size=block_size)

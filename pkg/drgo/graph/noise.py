import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .edges import EdgeSet
from .exceptions import NoiseInjectionError
from .graph import InteractionGraph

logger = logging.getLogger(__name__)

# below this many candidate pairs, non-edges are enumerated instead of rejection sampled
_ENUMERATION_LIMIT = 4_000_000


@dataclass(frozen=True, eq=False)
class NoisyGraph:
    graph: InteractionGraph
    removed: EdgeSet
    added: EdgeSet


def sample_non_edges(
    graph: InteractionGraph, n: int, rng: np.random.Generator, exclude: Optional[EdgeSet] = None
) -> np.ndarray:
    """`n` distinct keys (user * n_items + item) that are neither edges of `graph` nor in `exclude`"""
    n_pairs = graph.n_users * graph.n_items
    existing = graph.edges.keys(graph.n_items)
    if exclude is not None and len(exclude):
        existing = np.union1d(existing, exclude.keys(graph.n_items))
    if n_pairs - len(existing) < n:
        raise NoiseInjectionError(
            f"cannot add {n} fake edges, only {n_pairs - len(existing)} non-edges in a "
            f"{graph.n_users}x{graph.n_items} graph"
        )
    if not n:
        return np.empty(0, dtype=np.int64)

    if n_pairs <= _ENUMERATION_LIMIT or n > (n_pairs - len(existing)) // 2:
        candidates = np.setdiff1d(np.arange(n_pairs, dtype=np.int64), existing, assume_unique=True)
        return np.sort(rng.choice(candidates, size=n, replace=False))

    chosen = np.empty(0, dtype=np.int64)
    while chosen.size < n:
        draw = rng.integers(0, n_pairs, size=2 * (n - chosen.size), dtype=np.int64)
        draw = draw[~np.isin(draw, existing)]
        # keep first occurrences in draw order so the result only depends on the generator
        _, first = np.unique(np.concatenate([chosen, draw]), return_index=True)
        chosen = np.concatenate([chosen, draw])[np.sort(first)][:n]
    return np.sort(chosen)


def corrupt_edges(
    graph: InteractionGraph, ratio: float, rng: Union[np.random.Generator, int], exclude: Optional[EdgeSet] = None
) -> NoisyGraph:
    """Replace floor(ratio * |E|) uniformly chosen edges with as many uniformly chosen non-edges

    Fake edges never coincide with an original edge or an edge of `exclude` (held-out sets of a split)
    and take timestamps drawn from the existing ones.

    Raises
    ------
    NoiseInjectionError
        When ratio is outside [0, 1) or the graph is too dense
    """
    if not 0 <= ratio < 1:
        raise NoiseInjectionError(f"noise ratio must be in [0, 1), got {ratio}")
    rng = np.random.default_rng(rng)

    n = int(np.floor(ratio * graph.n_edges + 1e-9))
    if not n:
        return NoisyGraph(graph=graph, removed=EdgeSet.empty(), added=EdgeSet.empty())

    keys = sample_non_edges(graph, n, rng, exclude=exclude)
    removed_index = rng.choice(graph.n_edges, size=n, replace=False)
    removed_mask = np.zeros(graph.n_edges, dtype=bool)
    removed_mask[removed_index] = True

    timestamps = rng.choice(graph.edges.timestamps, size=n, replace=True)
    added = EdgeSet.from_arrays(keys // graph.n_items, keys % graph.n_items, timestamps)
    removed = graph.edges.subset(removed_mask)
    kept = graph.edges.subset(~removed_mask)
    logger.debug(f"Replaced {n} of {graph.n_edges} edges with fake edges")
    return NoisyGraph(graph=graph.with_edges(kept.union(added)), removed=removed, added=added)


def inject_noise(
    graph: InteractionGraph,
    ratio: float,
    seed: Union[np.random.Generator, int] = 0,
    exclude: Optional[EdgeSet] = None,
) -> InteractionGraph:
    """Graph with floor(ratio * |E|) real edges swapped for fake ones; edge count is preserved"""
    return corrupt_edges(graph, ratio, seed, exclude=exclude).graph

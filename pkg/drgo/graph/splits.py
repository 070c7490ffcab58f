import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .edges import EdgeSet
from .exceptions import SplitError
from .graph import InteractionGraph

logger = logging.getLogger(__name__)

SPLIT_KINDS = ("popularity", "temporal", "exposure")
REMAINDER_RATIO = (0.7, 0.1, 0.2)


@dataclass(frozen=True, eq=False)
class SplitBundle:
    """Train graph plus validation, IID test and OOD test edges over the same node set

    The four edge sets are pairwise disjoint.
    """

    train: InteractionGraph
    valid: EdgeSet
    test_iid: EdgeSet
    test_ood: EdgeSet
    kind: str
    seed: Optional[int] = None
    ood_fraction: Optional[float] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.train.n_users

    @property
    def n_items(self) -> int:
        return self.train.n_items

    def counts(self) -> Dict[str, int]:
        return {
            "train": self.train.n_edges,
            "valid": len(self.valid),
            "test_iid": len(self.test_iid),
            "test_ood": len(self.test_ood),
        }

    def all_edges(self) -> EdgeSet:
        return self.train.edges.union(self.valid, self.test_iid, self.test_ood)

    def held_out_edges(self) -> EdgeSet:
        """Validation and both test sets"""
        return self.valid.union(self.test_iid, self.test_ood)


def remainder_counts(n: int) -> Tuple[int, int, int]:
    """Train/valid/test counts for `n` edges of one user, each within one edge of 7:1:2

    Valid and test are rounded half up and train takes the rest, so a user with any edge keeps
    at least one for training.
    """
    n_valid = int(np.floor(REMAINDER_RATIO[1] * n + 0.5))
    n_test = int(np.floor(REMAINDER_RATIO[2] * n + 0.5))
    return n - n_valid - n_test, n_valid, n_test


def _split_remainder(edges: EdgeSet, order_within_user: np.ndarray) -> Tuple[EdgeSet, EdgeSet, EdgeSet]:
    """Split edges 7:1:2 per user, following `order_within_user` (a permutation grouping each user contiguously)

    Each user's edges are taken in the given order: the first share goes to train, then valid, then test.
    """
    users = edges.users[order_within_user]
    labels = np.empty(len(edges), dtype=np.int8)
    boundaries = np.flatnonzero(np.diff(users)) + 1
    starts = np.concatenate([[0], boundaries]) if len(edges) else np.empty(0, dtype=int)
    ends = np.concatenate([boundaries, [len(edges)]]) if len(edges) else np.empty(0, dtype=int)
    for start, end in zip(starts, ends):
        n_train, n_valid, _ = remainder_counts(int(end - start))
        labels[start : start + n_train] = 0
        labels[start + n_train : start + n_train + n_valid] = 1
        labels[start + n_train + n_valid : end] = 2

    position_labels = np.empty(len(edges), dtype=np.int8)
    position_labels[order_within_user] = labels
    return tuple(edges.subset(position_labels == label) for label in range(3))  # type: ignore


def _shuffled_by_user(edges: EdgeSet, rng: np.random.Generator) -> np.ndarray:
    """Random order of edges, grouped by user"""
    noise = rng.permutation(len(edges))
    return np.lexsort((noise, edges.users))


def _bundle(
    graph: InteractionGraph,
    remainder: EdgeSet,
    ood: EdgeSet,
    order: np.ndarray,
    kind: str,
    seed: Optional[int],
    ood_fraction: Optional[float],
    extras: Optional[Dict[str, Any]] = None,
) -> SplitBundle:
    train, valid, test_iid = _split_remainder(remainder, order)
    if not len(train) or not len(test_iid):
        raise SplitError(
            f"{kind} split of {graph.n_edges} edges leaves train={len(train)}, valid={len(valid)}, "
            f"test_iid={len(test_iid)}; the graph is too small"
        )
    logger.debug(
        f"{kind} split: train={len(train)}, valid={len(valid)}, test_iid={len(test_iid)}, test_ood={len(ood)}"
    )
    return SplitBundle(
        train=graph.with_edges(train),
        valid=valid,
        test_iid=test_iid,
        test_ood=ood,
        kind=kind,
        seed=seed,
        ood_fraction=ood_fraction,
        extras=extras or {},
    )


def _check_fraction(ood_fraction: float):
    if not 0 <= ood_fraction < 1:
        raise SplitError(f"ood_fraction must be in [0, 1), got {ood_fraction}")


def split_popularity(graph: InteractionGraph, ood_fraction: float = 0.2, seed: int = 0) -> SplitBundle:
    """Hold out interactions whose item histogram is as flat as possible

    Items are visited in rounds: every round draws one not yet selected interaction of each item
    that still has one, until the budget of `ood_fraction` of all interactions is spent; the last,
    partial round picks its items uniformly at random. The remainder is split 7:1:2 per user.

    Raises
    ------
    SplitError
        When the fraction is out of range or the remainder is too small to split
    """
    _check_fraction(ood_fraction)
    rng = np.random.default_rng(seed)
    edges = graph.edges
    budget = int(np.floor(ood_fraction * len(edges) + 1e-9))

    # rank of every edge within its item, in random order
    by_item = np.lexsort((rng.permutation(len(edges)), edges.items))
    item_sorted = edges.items[by_item]
    item_start = np.searchsorted(item_sorted, item_sorted, side="left")
    rank = np.empty(len(edges), dtype=np.int64)
    rank[by_item] = np.arange(len(edges)) - item_start

    selected = np.zeros(len(edges), dtype=bool)
    per_round = np.bincount(rank) if len(edges) else np.empty(0, dtype=np.int64)
    spent = 0
    for level, size in enumerate(per_round):
        if spent + size <= budget:
            selected |= rank == level
            spent += int(size)
            continue
        candidates = np.flatnonzero(rank == level)
        selected[rng.choice(candidates, size=budget - spent, replace=False)] = True
        spent = budget
        break

    ood = edges.subset(selected)
    remainder = edges.subset(~selected)
    return _bundle(graph, remainder, ood, _shuffled_by_user(remainder, rng), "popularity", seed, ood_fraction)


def split_temporal(graph: InteractionGraph, ood_fraction: float = 0.2) -> SplitBundle:
    """Hold out the latest `ood_fraction` of every user's interactions

    Interactions are ordered per user by (timestamp, item index), so ties on the timestamp go to the
    higher item index. The remainder is split 7:1:2 per user in time order: oldest to train.

    Raises
    ------
    SplitError
        When timestamps are missing, the fraction is out of range or the remainder is too small
    """
    _check_fraction(ood_fraction)
    edges = graph.edges
    if len(edges) and not edges.timestamps.any():
        raise SplitError("temporal split needs timestamps, every timestamp is 0")

    order = np.lexsort((edges.items, edges.timestamps, edges.users))
    users = edges.users[order]
    boundaries = np.flatnonzero(np.diff(users)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(edges)]])

    is_ood = np.zeros(len(edges), dtype=bool)
    for start, end in zip(starts, ends):
        n_ood = int(np.floor(ood_fraction * (end - start) + 1e-9))
        if n_ood:
            is_ood[order[end - n_ood : end]] = True

    ood = edges.subset(is_ood)
    remainder = edges.subset(~is_ood)
    remainder_order = np.lexsort((remainder.items, remainder.timestamps, remainder.users))
    return _bundle(graph, remainder, ood, remainder_order, "temporal", None, ood_fraction)


def split_exposure(graph: InteractionGraph, fully_observed: EdgeSet, seed: int = 0) -> SplitBundle:
    """Use a fully exposed edge set as OOD test and split the biased remainder 7:1:2 per user

    Edges of `graph` that also appear in `fully_observed` are removed from the remainder with a warning.

    Raises
    ------
    SplitError
        When observed edges fall outside the graph or the remainder is too small
    """
    bounds = fully_observed.max_index()
    if bounds is not None and (bounds[0] >= graph.n_users or bounds[1] >= graph.n_items):
        raise SplitError(f"observed edge {bounds} is outside the {graph.n_users}x{graph.n_items} graph")

    overlap = fully_observed.contains(graph.edges.users, graph.edges.items, graph.n_items)
    n_overlap = int(overlap.sum())
    if n_overlap:
        logger.warning(
            f"{n_overlap} fully observed edges also appear in the biased graph, removing them from the train side",
            extra={"overlap_removed": n_overlap},
        )
    remainder = graph.edges.subset(~overlap)
    rng = np.random.default_rng(seed)
    order = _shuffled_by_user(remainder, rng)
    extras = {"overlap_removed": n_overlap}
    return _bundle(graph, remainder, fully_observed, order, "exposure", seed, None, extras)

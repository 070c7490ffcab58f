import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .edges import EdgeSet
from .exceptions import EmptyGraphError, InvalidEdgesError
from .interactions import Interaction
from .presets import PositiveRule, preset_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Bipartite user-item graph over dense indices

    Users occupy nodes `0..n_users-1` and item `i` is node `n_users + i`. Adjacency matrices are
    built lazily and cached; the graph itself is immutable.

    Parameters
    ----------
    n_users : int
        number of user nodes
    n_items : int
        number of item nodes
    edges : EdgeSet
        unique (user, item, timestamp) triples
    features : np.ndarray, optional
        node feature matrix of shape (n_users + n_items, f)
    user_ids, item_ids : Tuple[str, ...], optional
        original identifiers of the dense indices
    """

    n_users: int
    n_items: int
    edges: EdgeSet
    features: Optional[np.ndarray] = None
    user_ids: Optional[Tuple[str, ...]] = None
    item_ids: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.n_users < 1 or self.n_items < 1:
            raise InvalidEdgesError(f"graph needs at least one user and one item, got {self.n_users}x{self.n_items}")
        bounds = self.edges.max_index()
        if bounds is not None and (bounds[0] >= self.n_users or bounds[1] >= self.n_items):
            raise InvalidEdgesError(f"edge index {bounds} out of range for {self.n_users} users, {self.n_items} items")
        if self.features is not None and (self.features.ndim != 2 or self.features.shape[0] != self.n_nodes):
            raise InvalidEdgesError(f"features must have shape ({self.n_nodes}, f), got {self.features.shape}")

    @classmethod
    def from_edges(
        cls,
        n_users: int,
        n_items: int,
        users: Sequence[int],
        items: Sequence[int],
        timestamps: Optional[Sequence[int]] = None,
        features: Optional[np.ndarray] = None,
    ) -> "InteractionGraph":
        return cls(n_users, n_items, EdgeSet.from_arrays(users, items, timestamps), features=features)

    @property
    def n_nodes(self) -> int:
        return self.n_users + self.n_items

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def with_edges(self, edges: EdgeSet) -> "InteractionGraph":
        """Same node set and features, different edges"""
        return replace(self, edges=edges)

    @cached_property
    def interaction_matrix(self) -> sp.csr_matrix:
        """Binary (n_users, n_items) matrix R"""
        data = np.ones(self.n_edges)
        return sp.csr_matrix((data, (self.edges.users, self.edges.items)), shape=(self.n_users, self.n_items))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric binary adjacency [[0, R], [R^T, 0]] over all nodes"""
        matrix = sp.bmat([[None, self.interaction_matrix], [self.interaction_matrix.T, None]], format="csr")
        matrix.sort_indices()
        return matrix

    @cached_property
    def normalized(self) -> sp.csr_matrix:
        return normalized_adjacency(self)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @cached_property
    def user_positives(self) -> List[np.ndarray]:
        return self.edges.items_by_user(self.n_users)


def normalized_adjacency(graph: Union[InteractionGraph, sp.spmatrix]) -> sp.csr_matrix:
    """D^-1/2 A D^-1/2, isolated nodes keep all-zero rows

    Parameters
    ----------
    graph : InteractionGraph or sparse matrix
        graph, or a square symmetric adjacency matrix

    Returns
    -------
    sp.csr_matrix
        normalized adjacency, entry (u, i) equals 1/sqrt(d_u d_i) for every edge
    """
    adjacency = graph.adjacency if isinstance(graph, InteractionGraph) else sp.csr_matrix(graph)
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(degree, dtype=float)
    connected = degree > 0
    inv_sqrt[connected] = 1.0 / np.sqrt(degree[connected])
    scaling = sp.diags(inv_sqrt)
    normalized = (scaling @ adjacency @ scaling).tocsr()
    normalized.sort_indices()
    return normalized


def build_graph(
    interactions: Sequence[Interaction],
    min_user_deg: int = 0,
    min_item_deg: int = 0,
    positive_rule: Union[PositiveRule, str, None] = None,
    preset: Optional[str] = None,
) -> InteractionGraph:
    """Filter raw interactions into an InteractionGraph

    Only positive interactions are kept, then users and items below the degree thresholds are
    dropped repeatedly until no further node falls below. Repeated (user, item) pairs collapse
    into one edge carrying the latest timestamp. Dense indices follow first appearance in the input.

    Parameters
    ----------
    interactions : Sequence[Interaction]
        raw rows, as returned by `load_interactions`
    min_user_deg : int
        minimum number of positive interactions a user keeps
    min_item_deg : int
        minimum number of positive interactions an item keeps
    positive_rule : PositiveRule or str, optional
        threshold on the rating column, e.g. `rating>=4`; keeps everything by default
    preset : str, optional
        named corpus (`food`, `yelp2018`, `douban`, `kuairec`) overriding thresholds and rule

    Raises
    ------
    EmptyGraphError
        When no interaction survives filtering
    """
    if preset is not None:
        min_user_deg, min_item_deg, positive_rule = preset_rule(preset)
    if isinstance(positive_rule, str):
        positive_rule = PositiveRule.parse(positive_rule)
    if positive_rule is None:
        positive_rule = PositiveRule(kind="rating", threshold=-np.inf)
    if min_user_deg < 0 or min_item_deg < 0:
        raise ValueError(f"degree thresholds must be >= 0, got {min_user_deg}, {min_item_deg}")

    frame = pd.DataFrame(
        {
            "user": [row.user_id for row in interactions],
            "item": [row.item_id for row in interactions],
            "rating": np.array([row.rating for row in interactions], dtype=float),
            "timestamp": np.array([row.timestamp for row in interactions], dtype=np.int64),
        }
    )
    user_codes, user_labels = pd.factorize(frame["user"])
    item_codes, item_labels = pd.factorize(frame["item"])
    frame = frame.assign(user=user_codes, item=item_codes)[positive_rule.accepts(frame["rating"].to_numpy())]
    frame = frame.groupby(["user", "item"], as_index=False, sort=True)["timestamp"].max()

    users = frame["user"].to_numpy(dtype=np.int64)
    items = frame["item"].to_numpy(dtype=np.int64)
    timestamps = frame["timestamp"].to_numpy(dtype=np.int64)

    rounds = 0
    while users.size:
        user_deg = np.bincount(users)[users]
        item_deg = np.bincount(items)[items]
        keep = (user_deg >= min_user_deg) & (item_deg >= min_item_deg)
        rounds += 1
        if keep.all():
            break
        users, items, timestamps = users[keep], items[keep], timestamps[keep]

    logger.debug(f"Degree filtering reached a fixpoint after {rounds} rounds with {users.size} edges")
    if not users.size:
        raise EmptyGraphError(
            f"no interaction left after filtering (rule {positive_rule}, users >= {min_user_deg}, "
            f"items >= {min_item_deg})"
        )

    kept_users = np.unique(users)
    kept_items = np.unique(items)
    return InteractionGraph(
        n_users=int(kept_users.size),
        n_items=int(kept_items.size),
        edges=EdgeSet.from_arrays(np.searchsorted(kept_users, users), np.searchsorted(kept_items, items), timestamps),
        user_ids=tuple(str(label) for label in np.asarray(user_labels)[kept_users]),
        item_ids=tuple(str(label) for label in np.asarray(item_labels)[kept_items]),
    )

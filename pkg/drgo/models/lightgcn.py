import logging
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp

from ..autodiff import (
    Tensor,
    add,
    concat_rows,
    gather_rows,
    hadamard,
    matmul,
    parameter,
    scale,
    softplus,
    sub,
    sum_,
)
from ..graph import EmptyGraphError, InteractionGraph
from .exceptions import NegativeSamplingError, NodeIndexError

logger = logging.getLogger(__name__)

INIT_STD = 0.1
MAX_REJECTION_ROUNDS = 32


@dataclass
class BackboneModel:
    """Embedding-propagation backbone over the normalized bipartite adjacency

    Parameters
    ----------
    user_embeddings : Tensor
        (n_users, d) free embeddings
    item_embeddings : Tensor
        (n_items, d) free embeddings
    adjacency : sp.csr_matrix
        normalized adjacency over all n_users + n_items nodes
    n_layers : int
        number of propagation layers L
    """

    user_embeddings: Tensor
    item_embeddings: Tensor
    adjacency: sp.csr_matrix
    n_layers: int = 3

    @classmethod
    def initialize(
        cls, graph: InteractionGraph, embed_dim: int, n_layers: int, rng: np.random.Generator
    ) -> "BackboneModel":
        """Gaussian N(0, 0.1^2) embeddings for every user and item of `graph`"""
        return cls(
            user_embeddings=parameter(rng.normal(0.0, INIT_STD, (graph.n_users, embed_dim)), name="user_embeddings"),
            item_embeddings=parameter(rng.normal(0.0, INIT_STD, (graph.n_items, embed_dim)), name="item_embeddings"),
            adjacency=graph.normalized,
            n_layers=n_layers,
        )

    @property
    def n_users(self) -> int:
        return self.user_embeddings.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_embeddings.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.user_embeddings.shape[1]

    def parameters(self) -> List[Tensor]:
        return [self.user_embeddings, self.item_embeddings]


class Propagated(NamedTuple):
    """Final user and item embeddings after layer averaging"""

    users: Tensor
    items: Tensor


def propagate(model: BackboneModel, initial: Optional[Tensor] = None) -> Propagated:
    """Mean of E(0)..E(L) with E(l) = A_norm E(l-1)

    Parameters
    ----------
    model : BackboneModel
        provides the adjacency and layer count
    initial : Tensor, optional
        (n_users + n_items, d) E(0); defaults to the model's stacked free embeddings

    Returns
    -------
    Propagated
        final user rows and item rows, differentiable w.r.t. E(0)
    """
    if initial is None:
        initial = concat_rows([model.user_embeddings, model.item_embeddings])

    layers = [initial]
    for _ in range(model.n_layers):
        layers.append(matmul(model.adjacency, layers[-1]))
    combined = layers[0]
    for layer in layers[1:]:
        combined = add(combined, layer)
    if model.n_layers:
        combined = scale(combined, 1.0 / (model.n_layers + 1))

    users = gather_rows(combined, np.arange(model.n_users))
    items = gather_rows(combined, model.n_users + np.arange(model.n_items))
    return Propagated(users=users, items=items)


def _check_range(index: np.ndarray, size: int, what: str) -> None:
    if index.size and (index.min() < 0 or index.max() >= size):
        raise NodeIndexError(f"{what} index out of range for {size} {what}s")


def pair_scores(embeddings: Propagated, users, items) -> Tensor:
    """Differentiable inner products <e_u, e_i> for aligned index arrays"""
    users = np.asarray(users, dtype=np.int64).reshape(-1)
    items = np.asarray(items, dtype=np.int64).reshape(-1)
    _check_range(users, embeddings.users.shape[0], "user")
    _check_range(items, embeddings.items.shape[0], "item")
    return sum_(hadamard(gather_rows(embeddings.users, users), gather_rows(embeddings.items, items)), axis=1)


def score(embeddings: Propagated, users: Union[int, np.ndarray], items: Union[int, np.ndarray]):
    """Predicted preference of user(s) for item(s), as plain floats

    Raises
    ------
    NodeIndexError
        When a user or item index is out of range
    """
    values = pair_scores(embeddings, users, items).value
    return float(values[0]) if np.ndim(users) == 0 and np.ndim(items) == 0 else values


def score_all(embeddings: Propagated) -> np.ndarray:
    """(n_users, n_items) preference matrix"""
    return embeddings.users.value @ embeddings.items.value.T


def bpr_terms(pos_scores: Tensor, neg_scores: Tensor) -> Tensor:
    """Per-triplet -log sigmoid(pos - neg), computed as softplus(neg - pos)"""
    return softplus(sub(neg_scores, pos_scores))


def bpr_loss(pos_scores: Tensor, neg_scores: Tensor) -> Tensor:
    """Sum over triplets of -log sigmoid(r_pos - r_neg)"""
    return sum_(bpr_terms(pos_scores, neg_scores))


@dataclass(frozen=True)
class TripletBatch:
    """Aligned arrays of (user, positive item, negative item)"""

    users: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray

    def __len__(self) -> int:
        return len(self.users)

    def __iter__(self) -> Iterator:
        return zip(self.users.tolist(), self.positives.tolist(), self.negatives.tolist())


def sample_triplets(graph: InteractionGraph, batch_size: int, rng: np.random.Generator) -> TripletBatch:
    """Uniform users with at least one positive, a uniform positive each and a uniform negative

    Negatives are drawn uniformly over all items and redrawn while they hit a positive; after
    `MAX_REJECTION_ROUNDS` the remaining ones are drawn from the explicit complement.

    Raises
    ------
    NegativeSamplingError
        When a sampled user has interacted with every item
    """
    positives = graph.user_positives
    degrees = np.fromiter((len(items) for items in positives), dtype=np.int64, count=graph.n_users)
    eligible = np.flatnonzero(degrees)
    if not eligible.size:
        raise EmptyGraphError("cannot sample triplets from a graph without interactions")

    users = eligible[rng.integers(0, eligible.size, size=batch_size)]
    saturated = users[degrees[users] >= graph.n_items]
    if saturated.size:
        raise NegativeSamplingError(int(saturated[0]))

    offsets = np.floor(rng.random(batch_size) * degrees[users]).astype(np.int64)
    pos = np.fromiter(
        (positives[user][offset] for user, offset in zip(users, offsets)), dtype=np.int64, count=batch_size
    )

    neg = rng.integers(0, graph.n_items, size=batch_size)
    pending = np.flatnonzero(graph.edges.contains(users, neg, graph.n_items))
    for _ in range(MAX_REJECTION_ROUNDS):
        if not pending.size:
            break
        neg[pending] = rng.integers(0, graph.n_items, size=pending.size)
        pending = pending[graph.edges.contains(users[pending], neg[pending], graph.n_items)]
    for row in pending:
        complement = np.setdiff1d(np.arange(graph.n_items), positives[users[row]], assume_unique=True)
        neg[row] = complement[rng.integers(0, complement.size)]

    return TripletBatch(users=users, positives=pos, negatives=neg)

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from ..autodiff import (
    Tensor,
    add,
    constant,
    exp,
    gather_rows,
    hadamard,
    log,
    matmul,
    parameter,
    scale,
    softplus,
    square,
    sub,
    sum_,
)
from ..graph import InteractionGraph

logger = logging.getLogger(__name__)

DENSE_LIMIT = 200
FEATURE_INIT_STD = 0.1


@dataclass
class EncoderParams:
    """Two-headed graph convolution encoder sharing its first layer

    Parameters
    ----------
    shared : Tensor
        (f, h) first-layer weight
    mean_head : Tensor
        (h, d) weight producing mu
    logvar_head : Tensor
        (h, d) weight producing log sigma^2
    """

    shared: Tensor
    mean_head: Tensor
    logvar_head: Tensor

    @classmethod
    def initialize(
        cls, in_dim: int, hidden_dim: int, latent_dim: int, rng: np.random.Generator
    ) -> "EncoderParams":
        """Glorot-uniform weights; the log-variance head starts at zero so sigma starts at 1"""

        def glorot(rows: int, cols: int) -> np.ndarray:
            bound = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-bound, bound, (rows, cols))

        return cls(
            shared=parameter(glorot(in_dim, hidden_dim), name="encoder.shared"),
            mean_head=parameter(glorot(hidden_dim, latent_dim), name="encoder.mean_head"),
            logvar_head=parameter(np.zeros((hidden_dim, latent_dim)), name="encoder.logvar_head"),
        )

    @property
    def latent_dim(self) -> int:
        return self.mean_head.shape[1]

    def parameters(self) -> List[Tensor]:
        return [self.shared, self.mean_head, self.logvar_head]


def node_features(
    graph: InteractionGraph, use_features: bool, feature_dim: int, rng: np.random.Generator
) -> Tensor:
    """Encoder input for `graph`

    Returns the graph's own features as a constant when present and enabled, otherwise trainable
    free embeddings (N, feature_dim) drawn from N(0, 0.1^2).
    """
    if use_features and graph.features is not None:
        return constant(graph.features)
    if use_features:
        logger.debug("Graph carries no node features, using trainable free embeddings")
    return parameter(rng.normal(0.0, FEATURE_INIT_STD, (graph.n_nodes, feature_dim)), name="node_features")


def encode(adjacency: sp.spmatrix, features, params: EncoderParams) -> Tuple[Tensor, Tensor]:
    """Gaussian posterior parameters of every node

    H = A X W_shared, mu = A H W_mu and sigma = exp(0.5 * A H W_logvar); no nonlinearity between layers.

    Returns
    -------
    Tuple[Tensor, Tensor]
        mu and sigma, both (N, d)
    """
    hidden = matmul(adjacency, matmul(features, params.shared))
    mu = matmul(adjacency, matmul(hidden, params.mean_head))
    logvar = matmul(adjacency, matmul(hidden, params.logvar_head))
    return mu, exp(scale(logvar, 0.5))


@dataclass
class LatentState:
    """One reparameterized draw of the node latents

    `e0 = mu + sigma * noise` holds for the recorded `noise`; `e0_denoised` is filled in by the
    diffusion stage and stays None without it.
    """

    mu: Tensor
    sigma: Tensor
    e0: Tensor
    noise: np.ndarray
    e0_denoised: Optional[np.ndarray] = None


def reparameterize(
    mu: Tensor, sigma: Tensor, rng: Optional[np.random.Generator] = None, noise: Optional[np.ndarray] = None
) -> Tensor:
    """mu + sigma * eps with eps ~ N(0, I); gradients reach mu and sigma, never eps"""
    if noise is None:
        if rng is None:
            raise ValueError("reparameterize needs either a generator or explicit noise")
        noise = rng.standard_normal(mu.shape)
    return add(mu, hadamard(sigma, constant(noise)))


def sample_latent(mu: Tensor, sigma: Tensor, rng: np.random.Generator) -> LatentState:
    noise = rng.standard_normal(mu.shape)
    return LatentState(mu=mu, sigma=sigma, e0=reparameterize(mu, sigma, noise=noise), noise=noise)


def decode(embeddings) -> np.ndarray:
    """Dense reconstructed adjacency probabilities sigmoid(E E^T)"""
    values = embeddings.value if isinstance(embeddings, Tensor) else np.asarray(embeddings, dtype=np.float64)
    return expit(values @ values.T)


def pair_logits(embeddings: Tensor, rows, cols) -> Tensor:
    """Differentiable <e_r, e_c> for aligned node index arrays"""
    return sum_(hadamard(gather_rows(embeddings, rows), gather_rows(embeddings, cols)), axis=1)


def _sample_non_edges(adjacency: sp.csr_matrix, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    n_nodes = adjacency.shape[0]
    rows = rng.integers(0, n_nodes, size=n)
    cols = rng.integers(0, n_nodes, size=n)
    for _ in range(32):
        hits = np.flatnonzero(np.asarray(adjacency[rows, cols]).ravel())
        if not hits.size:
            break
        rows[hits] = rng.integers(0, n_nodes, size=hits.size)
        cols[hits] = rng.integers(0, n_nodes, size=hits.size)
    else:
        keep = np.asarray(adjacency[rows, cols]).ravel() == 0
        rows, cols = rows[keep], cols[keep]
    return rows, cols


def reconstruction_loss(
    embeddings: Tensor,
    adjacency: sp.spmatrix,
    rng: Optional[np.random.Generator] = None,
    dense: Optional[bool] = None,
) -> Tensor:
    """Positively reweighted binary cross-entropy of sigmoid(E E^T) against the binary adjacency

    Dense mode sums over all N^2 entries; sampled mode uses every stored edge plus as many uniformly
    drawn non-edges and rescales the negative part so both estimate the same quantity. The sum is
    divided by N^2. Positive entries are weighted by #non-edges / #edges.

    Parameters
    ----------
    embeddings : Tensor
        (N, d) latent rows
    adjacency : sp.spmatrix
        binary symmetric (N, N) target
    rng : np.random.Generator, optional
        required in sampled mode
    dense : bool, optional
        defaults to dense for N <= DENSE_LIMIT
    """
    adjacency = sp.csr_matrix(adjacency)
    n_nodes = adjacency.shape[0]
    n_entries = float(n_nodes) * n_nodes
    n_pos = adjacency.nnz
    n_neg = n_entries - n_pos
    pos_weight = n_neg / n_pos if n_pos else 1.0
    dense = n_nodes <= DENSE_LIMIT if dense is None else dense

    if dense:
        target = adjacency.toarray() > 0
        rows, cols = np.indices((n_nodes, n_nodes)).reshape(2, -1)
        logits = pair_logits(embeddings, rows, cols)
        signs = np.where(target.ravel(), -1.0, 1.0)
        weights = np.where(target.ravel(), pos_weight, 1.0)
        total = sum_(hadamard(constant(weights), softplus(hadamard(constant(signs), logits))))
        return scale(total, 1.0 / n_entries)

    if rng is None:
        raise ValueError("sampled reconstruction needs a generator")
    coo = adjacency.tocoo()
    positive = sum_(softplus(scale(pair_logits(embeddings, coo.row, coo.col), -1.0)))
    neg_rows, neg_cols = _sample_non_edges(adjacency, n_pos, rng)
    negative = sum_(softplus(pair_logits(embeddings, neg_rows, neg_cols)))
    negative_scale = n_neg / max(len(neg_rows), 1)
    total = add(scale(positive, pos_weight), scale(negative, negative_scale))
    return scale(total, 1.0 / n_entries)


def kl_term(mu: Tensor, sigma: Tensor) -> Tensor:
    """KL(N(mu, sigma^2) || N(0, I)) = 0.5 * sum(mu^2 + sigma^2 - 1 - 2 log sigma)"""
    inner = sub(add(square(mu), square(sigma)), add(scale(log(sigma), 2.0), 1.0))
    return scale(sum_(inner), 0.5)


def vgae_loss(
    embeddings: Tensor,
    adjacency: sp.spmatrix,
    mu: Tensor,
    sigma: Tensor,
    rng: Optional[np.random.Generator] = None,
    dense: Optional[bool] = None,
) -> Tensor:
    """Negative evidence lower bound per adjacency entry

    Reconstruction cross-entropy of `embeddings` against `adjacency` plus the Gaussian KL term, both
    divided by N^2.
    """
    n_entries = float(adjacency.shape[0]) ** 2
    reconstruction = reconstruction_loss(embeddings, adjacency, rng=rng, dense=dense)
    return add(reconstruction, scale(kl_term(mu, sigma), 1.0 / n_entries))

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .edges import EdgeSet
from .graph import InteractionGraph
from .noise import sample_non_edges

logger = logging.getLogger(__name__)

MAJOR_GROUP = 0
MINOR_GROUP = 1

TIME_HORIZON = 1_000_000


def row_percentile(preference: np.ndarray) -> np.ndarray:
    """Rank of every item within its user's row, scaled to [0, 1]"""
    ranks = np.argsort(np.argsort(preference, axis=1), axis=1)
    return ranks / max(preference.shape[1] - 1, 1)


@dataclass(frozen=True, eq=False)
class SyntheticBenchmark:
    """Generated graph plus everything known about how it was generated

    Attributes
    ----------
    graph : InteractionGraph
        popularity-biased interactions, noise edges included
    preference : np.ndarray
        ground-truth affinity, shape (n_users, n_items); higher is better
    user_clusters, item_clusters : np.ndarray
        latent cluster of every user and item
    user_groups : np.ndarray
        MAJOR_GROUP or MINOR_GROUP per user, by activity
    noise_edges : EdgeSet
        injected edges unrelated to preference
    fully_observed : EdgeSet
        relevant pairs of a uniformly exposed user x item block, disjoint from `graph`
    clean_variance, noise_variance : float
        mean squared gap between an observed label (1) and the preference percentile, over clean
        and noise edges; noise_variance is 0.0 without noise edges
    """

    graph: InteractionGraph
    preference: np.ndarray
    user_clusters: np.ndarray
    item_clusters: np.ndarray
    user_groups: np.ndarray
    noise_edges: EdgeSet
    fully_observed: EdgeSet
    clean_variance: float
    noise_variance: float

    def preference_percentile(self) -> np.ndarray:
        return row_percentile(self.preference)

    def is_noise(self, users, items) -> np.ndarray:
        return self.noise_edges.contains(users, items, self.graph.n_items)


def generate_synthetic(
    n_users: int = 2000,
    n_items: int = 1500,
    n_clusters: int = 3,
    latent_dim: int = 16,
    mean_degree: float = 20.0,
    popularity_gamma: float = 1.0,
    noise_ratio: float = 0.0,
    minor_fraction: float = 0.1,
    feature_dim: Optional[int] = None,
    temperature: float = 0.5,
    observed_fraction: float = 0.3,
    relevant_rate: float = 0.1,
    seed: int = 0,
) -> SyntheticBenchmark:
    """Latent-factor recommendation benchmark with popularity-biased exposure

    Users and items are drawn around `n_clusters` Gaussian centres; their inner product is the
    ground-truth preference. Every user draws a lognormal activity level and samples that many items
    without replacement with probability proportional to exp(preference / temperature) times
    popularity ** popularity_gamma (Zipf popularity). Users holding the last `minor_fraction` of all
    interactions, least active first, form the minor group.

    `noise_ratio` adds that share of extra uniformly random edges, labelled in `noise_edges`.
    A uniformly exposed block of `observed_fraction` of the users and items records every relevant
    pair (preference percentile within the top `relevant_rate`) not already in the graph; it serves
    as the OOD test set of an exposure split.

    Parameters
    ----------
    feature_dim : int, optional
        when set, node features are a noisy random projection of the latent factors
    seed : int
        root of every random draw

    Returns
    -------
    SyntheticBenchmark
    """
    if not 0 <= noise_ratio < 1:
        raise ValueError(f"noise_ratio must be in [0, 1), got {noise_ratio}")
    if not 0 <= minor_fraction < 1:
        raise ValueError(f"minor_fraction must be in [0, 1), got {minor_fraction}")
    rng = np.random.default_rng(seed)

    centres = rng.normal(0.0, 1.0, size=(n_clusters, latent_dim))
    user_clusters = rng.integers(0, n_clusters, size=n_users)
    item_clusters = rng.integers(0, n_clusters, size=n_items)
    user_factors = centres[user_clusters] + rng.normal(0.0, 0.5, size=(n_users, latent_dim))
    item_factors = centres[item_clusters] + rng.normal(0.0, 0.5, size=(n_items, latent_dim))
    preference = user_factors @ item_factors.T
    preference = (preference - preference.mean()) / preference.std()

    popularity = 1.0 / (rng.permutation(n_items) + 1.0)
    logits = preference / temperature + popularity_gamma * np.log(popularity)

    activity = rng.lognormal(0.0, 0.75, size=n_users)
    degree = np.clip(np.round(activity / activity.mean() * mean_degree), 2, max(2, n_items // 2)).astype(int)

    # Gumbel top-k: sampling without replacement proportional to exp(logits)
    perturbed = logits + rng.gumbel(size=logits.shape)
    ranking = np.argsort(-perturbed, axis=1)
    users = np.repeat(np.arange(n_users), degree)
    items = np.concatenate([ranking[user, : degree[user]] for user in range(n_users)])
    timestamps = rng.integers(1, TIME_HORIZON, size=users.size)
    clean = EdgeSet.from_arrays(users, items, timestamps)

    features = None
    if feature_dim is not None:
        projection = rng.normal(0.0, 1.0 / np.sqrt(latent_dim), size=(latent_dim, feature_dim))
        factors = np.concatenate([user_factors, item_factors], axis=0)
        features = factors @ projection + rng.normal(0.0, 0.1, size=(n_users + n_items, feature_dim))

    graph = InteractionGraph(n_users=n_users, n_items=n_items, edges=clean, features=features)

    noise_edges = EdgeSet.empty()
    n_noise = int(np.floor(noise_ratio * len(clean) + 1e-9))
    if n_noise:
        keys = sample_non_edges(graph, n_noise, rng)
        noise_edges = EdgeSet.from_arrays(
            keys // n_items, keys % n_items, rng.integers(1, TIME_HORIZON, size=n_noise)
        )
        graph = graph.with_edges(clean.union(noise_edges))

    order = np.argsort(degree, kind="stable")
    cumulative_share = np.cumsum(degree[order]) / degree.sum()
    user_groups = np.full(n_users, MAJOR_GROUP)
    user_groups[order[cumulative_share <= minor_fraction]] = MINOR_GROUP

    percentile = row_percentile(preference)

    observed_users = np.sort(rng.choice(n_users, size=max(1, int(observed_fraction * n_users)), replace=False))
    observed_items = np.sort(rng.choice(n_items, size=max(1, int(observed_fraction * n_items)), replace=False))
    block = percentile[np.ix_(observed_users, observed_items)] >= 1.0 - relevant_rate
    rows, cols = np.nonzero(block)
    candidate_users, candidate_items = observed_users[rows], observed_items[cols]
    unseen = ~graph.edges.contains(candidate_users, candidate_items, n_items)
    fully_observed = EdgeSet.from_arrays(
        candidate_users[unseen], candidate_items[unseen], rng.integers(1, TIME_HORIZON, size=int(unseen.sum()))
    )

    clean_gap = 1.0 - percentile[clean.users, clean.items]
    noise_gap = 1.0 - percentile[noise_edges.users, noise_edges.items]
    logger.debug(
        f"Synthetic benchmark: {n_users} users, {n_items} items, {len(clean)} clean edges, {n_noise} noise edges, "
        f"{len(fully_observed)} fully observed edges"
    )
    return SyntheticBenchmark(
        graph=graph,
        preference=preference,
        user_clusters=user_clusters,
        item_clusters=item_clusters,
        user_groups=user_groups,
        noise_edges=noise_edges,
        fully_observed=fully_observed,
        clean_variance=float(np.mean(clean_gap**2)),
        noise_variance=float(np.mean(noise_gap**2)) if n_noise else 0.0,
    )

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from ..graph import EdgeSet, InteractionGraph, SplitBundle
from .exceptions import EmptyPositivesError

logger = logging.getLogger(__name__)

DEFAULT_KS = (10, 20)
USER_CHUNK = 1024

Scorer = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _positive_set(positives) -> set:
    if not isinstance(positives, (set, frozenset)):
        positives = set(np.asarray(positives).reshape(-1).tolist())
    if not positives:
        raise EmptyPositivesError("ranking metric needs at least one positive")
    return positives


def recall_at_k(ranked: Sequence[int], positives, k: int) -> float:
    """|top-k hits| / |positives|

    Raises
    ------
    EmptyPositivesError
        When there are no positives
    """
    relevant = _positive_set(positives)
    hits = sum(1 for item in list(ranked)[:k] if item in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranked: Sequence[int], positives, k: int) -> float:
    """DCG of the top-k with gain 1 / log2(rank + 1), over the ideal DCG of min(|positives|, k) hits

    Raises
    ------
    EmptyPositivesError
        When there are no positives
    """
    relevant = _positive_set(positives)
    top = list(ranked)[:k]
    dcg = sum(1.0 / np.log2(rank + 2) for rank, item in enumerate(top) if item in relevant)
    ideal = np.sum(1.0 / np.log2(np.arange(min(len(relevant), k)) + 2))
    return float(dcg / ideal)


@dataclass
class EvalReport:
    """Recall@K and NDCG@K averaged over users with at least one test positive

    Attributes
    ----------
    recall, ndcg : Dict[int, float]
        mean metric per K
    per_user_recall, per_user_ndcg : Dict[int, np.ndarray]
        metric of every evaluable user, aligned with `users`
    users : np.ndarray
        evaluable users
    """

    recall: Dict[int, float]
    ndcg: Dict[int, float]
    per_user_recall: Dict[int, np.ndarray] = field(repr=False)
    per_user_ndcg: Dict[int, np.ndarray] = field(repr=False)
    users: np.ndarray = field(repr=False)

    @property
    def n_evaluable(self) -> int:
        return len(self.users)

    @property
    def ks(self) -> List[int]:
        return sorted(self.recall)

    def to_rows(self, **labels) -> List[Dict[str, object]]:
        """One row per metric and K, prefixed with `labels`"""
        rows: List[Dict[str, object]] = []
        for k in self.ks:
            rows.append({**labels, "metric": "recall", "k": k, "value": self.recall[k]})
            rows.append({**labels, "metric": "ndcg", "k": k, "value": self.ndcg[k]})
        return rows

    def to_dict(self) -> Dict[str, object]:
        return {
            "n_evaluable": self.n_evaluable,
            "recall": {str(k): value for k, value in self.recall.items()},
            "ndcg": {str(k): value for k, value in self.ndcg.items()},
        }


def _score_rows(scorer: Scorer, users: np.ndarray) -> np.ndarray:
    if callable(scorer):
        return np.array(scorer(users), dtype=np.float64)
    return np.array(np.asarray(scorer)[users], dtype=np.float64)


def top_k_items(scores: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k best scores per row, best first, ties to the lower item index"""
    return np.argsort(-scores, axis=1, kind="stable")[:, :k]


def evaluate(
    scorer: Scorer,
    graph: InteractionGraph,
    test_edges: EdgeSet,
    ks: Sequence[int] = DEFAULT_KS,
    users: Optional[np.ndarray] = None,
) -> EvalReport:
    """Full ranking of every user's non-training items against held-out positives

    Parameters
    ----------
    scorer : np.ndarray or Callable
        (n_users, n_items) score matrix, or a function mapping a user index array to score rows
    graph : InteractionGraph
        training graph; its edges are excluded from the ranking
    test_edges : EdgeSet
        held-out positives
    ks : Sequence[int]
        cut-offs, non-empty
    users : np.ndarray, optional
        restrict to these users
    """
    ks = sorted({int(k) for k in ks})
    if not ks or ks[0] < 1:
        raise ValueError(f"cut-offs must be positive, got {ks}")
    positives = test_edges.items_by_user(graph.n_users)
    evaluable = np.array([user for user in range(graph.n_users) if len(positives[user])], dtype=np.int64)
    if users is not None:
        evaluable = np.intersect1d(evaluable, np.asarray(users, dtype=np.int64))

    per_user_recall = {k: np.zeros(len(evaluable)) for k in ks}
    per_user_ndcg = {k: np.zeros(len(evaluable)) for k in ks}
    train_positives = graph.user_positives
    discounts = 1.0 / np.log2(np.arange(max(ks)) + 2)

    for start in range(0, len(evaluable), USER_CHUNK):
        chunk = evaluable[start : start + USER_CHUNK]
        scores = _score_rows(scorer, chunk)
        for row, user in enumerate(chunk):
            scores[row, train_positives[user]] = -np.inf
        ranked = top_k_items(scores, max(ks))
        for row, user in enumerate(chunk):
            relevant = positives[user]
            hits = np.isin(ranked[row], relevant)
            for k in ks:
                top = hits[:k]
                ideal = discounts[: min(len(relevant), k)].sum()
                per_user_recall[k][start + row] = top.sum() / len(relevant)
                per_user_ndcg[k][start + row] = discounts[: top.size][top].sum() / ideal

    recall = {k: float(per_user_recall[k].mean()) if len(evaluable) else float("nan") for k in ks}
    ndcg = {k: float(per_user_ndcg[k].mean()) if len(evaluable) else float("nan") for k in ks}
    return EvalReport(
        recall=recall, ndcg=ndcg, per_user_recall=per_user_recall, per_user_ndcg=per_user_ndcg, users=evaluable
    )


def split_report(
    scores: Scorer, split: SplitBundle, ks: Sequence[int] = DEFAULT_KS, **labels
) -> List[Dict[str, object]]:
    """Report rows for the IID and OOD test sets of `split`; empty test sets are skipped"""
    rows: List[Dict[str, object]] = []
    for test_set, edges in (("iid", split.test_iid), ("ood", split.test_ood)):
        if not len(edges):
            logger.debug(f"No {test_set} test edges, skipping")
            continue
        rows.extend(evaluate(scores, split.train, edges, ks=ks).to_rows(**labels, test_set=test_set))
    return rows

import numpy as np
import pytest

from drgo.dro import kl_blowup_demo
from drgo.evaluation import ndcg_at_k, recall_at_k
from tests.performance.conftest import timing

KL_BLOWUP_SLA: float = 5.0
METRIC_ORACLE_SLA: float = 5.0


def brute_force_metrics(scores: np.ndarray, positives: set, k: int):
    # rank by (-score, item) so ties go to the lower index
    ranked = sorted(range(len(scores)), key=lambda item: (-scores[item], item))[:k]
    hits = [item in positives for item in ranked]
    recall = sum(hits) / len(positives)
    dcg = sum(1.0 / np.log2(rank + 2) for rank, hit in enumerate(hits) if hit)
    ideal = sum(1.0 / np.log2(rank + 2) for rank in range(min(len(positives), k)))
    return recall, dcg / ideal


@pytest.mark.perf
def test_kl_blows_up_on_every_disjoint_pair():
    with timing() as t:
        rows = kl_blowup_demo(n_pairs=50, support_size=5, seed=0)
        elapsed = t()

    assert sum(np.isinf(row["kl"]) for row in rows) == 50
    assert sum(np.isfinite(row["sinkhorn"]) for row in rows) == 50
    assert elapsed < KL_BLOWUP_SLA


@pytest.mark.perf
def test_metrics_match_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    with timing() as t:
        for _ in range(1000):
            n_items = int(rng.integers(5, 40))
            scores = rng.integers(0, 5, size=n_items).astype(float)
            positives = set(rng.choice(n_items, size=int(rng.integers(1, n_items)), replace=False).tolist())
            k = int(rng.integers(1, n_items + 1))
            ranked = sorted(range(n_items), key=lambda item: (-scores[item], item))

            recall, ndcg = brute_force_metrics(scores, positives, k)

            assert recall_at_k(ranked, positives, k) == pytest.approx(recall, abs=1e-12)
            assert ndcg_at_k(ranked, positives, k) == pytest.approx(ndcg, abs=1e-12)
        elapsed = t()

    assert elapsed < METRIC_ORACLE_SLA

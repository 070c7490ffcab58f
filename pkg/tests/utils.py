import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from drgo.graph import EdgeSet, InteractionGraph, SplitBundle
from drgo.training import TrainConfig, build_config

FIXTURES = Path(__file__).parent / "fixtures"

# small enough for a few epochs per test on any machine
FAST_CONFIG: Dict[str, Any] = {
    "embed_dim": 8,
    "n_layers": 2,
    "n_clusters": 3,
    "feature_dim": 8,
    "vgae_hidden_dim": 8,
    "diffusion_steps": 20,
    "batch_size": 256,
    "epochs": 2,
    "patience": 50,
}


def fixture_path(file_name: str) -> Path:
    return FIXTURES / file_name


def fast_config(**overrides) -> TrainConfig:
    return build_config({**FAST_CONFIG, **overrides})


def toy_graph() -> InteractionGraph:
    """3 users, 4 items

    u0: i0 i1, u1: i1 i2, u2: i2 i3
    """
    return InteractionGraph.from_edges(3, 4, users=[0, 0, 1, 1, 2, 2], items=[0, 1, 1, 2, 2, 3])


def random_graph(n_users: int, n_items: int, density: float, seed: int = 0) -> InteractionGraph:
    rng = np.random.default_rng(seed)
    users, items = np.nonzero(rng.random((n_users, n_items)) < density)
    return InteractionGraph.from_edges(
        n_users, n_items, users, items, timestamps=rng.integers(1, 10_000, size=users.size)
    )


def empty_split(n_users: int = 2, n_items: int = 2) -> SplitBundle:
    empty = EdgeSet.empty()
    graph = InteractionGraph(n_users=n_users, n_items=n_items, edges=empty)
    return SplitBundle(train=graph, valid=empty, test_iid=empty, test_ood=empty, kind="popularity")


def json_lines(text: str) -> List[Dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]

import time
from contextlib import contextmanager
from typing import Generator

import pytest

from drgo.training import TrainConfig
from tests.utils import fast_config

# desk-scale benchmark, large enough for the noise group to matter
BENCHMARK_SIZE = {"n_users": 300, "n_items": 200, "mean_degree": 12}
SEEDS = (0, 1, 2, 3, 4)
REQUIRED_SEEDS = 4


@contextmanager
def timing() -> Generator:
    """Wall-clock time of the block, in seconds

    Examples
    --------

        with timing() as t:
            train(config, split)
        elapsed = t()
    """
    start = time.perf_counter()
    yield lambda: time.perf_counter() - start


@pytest.fixture
def experiment_config() -> TrainConfig:
    return fast_config(embed_dim=16, feature_dim=16, vgae_hidden_dim=16, n_clusters=5, epochs=20, patience=20)

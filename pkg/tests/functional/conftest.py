import pytest

from drgo.graph import SplitBundle, generate_synthetic, save_split, split_popularity
from drgo.training import TrainConfig
from tests.utils import fast_config

SMALL_SYNTHETIC = {"n_users": 80, "n_items": 60, "mean_degree": 8}


@pytest.fixture(scope="session")
def small_split() -> SplitBundle:
    benchmark = generate_synthetic(seed=0, **SMALL_SYNTHETIC)
    return split_popularity(benchmark.graph, ood_fraction=0.2, seed=0)


@pytest.fixture
def split_dir(tmp_path, small_split):
    directory = tmp_path / "split"
    save_split(small_split, directory)
    return directory


@pytest.fixture
def erm_config() -> TrainConfig:
    return fast_config(method="erm")


@pytest.fixture
def drgo_config() -> TrainConfig:
    return fast_config(method="drgo")

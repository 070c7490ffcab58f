import json
from dataclasses import replace

import numpy as np
import pytest

from drgo.graph import (
    EdgeSet,
    InteractionGraph,
    InteractionParseError,
    NoiseInjectionError,
    SplitError,
    build_graph,
    corrupt_edges,
    inject_noise,
    load_interactions,
    load_split,
    read_edges,
    save_split,
    split_exposure,
    split_popularity,
    split_temporal,
    write_edges,
)
from drgo.graph.splits import remainder_counts
from drgo.utilities.validation import SchemaValidationError
from tests.utils import fixture_path, random_graph


@pytest.fixture
def fixture_graph() -> InteractionGraph:
    return build_graph(load_interactions(fixture_path("interactions.tsv")))


def assert_partition(bundle, graph):
    parts = [bundle.train.edges, bundle.valid, bundle.test_iid, bundle.test_ood]
    assert sum(len(part) for part in parts) == graph.n_edges
    # union raises on any shared edge
    assert bundle.all_edges().as_set() == graph.edges.as_set()


@pytest.mark.parametrize("n, expected", [(1, (1, 0, 0)), (5, (3, 1, 1)), (10, (7, 1, 2)), (3, (2, 0, 1))])
def test_remainder_counts(n, expected):
    assert remainder_counts(n) == expected


def test_remainder_counts_stay_within_one_edge_of_ratio():
    for n in range(1, 200):
        n_train, n_valid, n_test = remainder_counts(n)
        assert n_train + n_valid + n_test == n
        assert n_train >= 1
        assert abs(n_valid - 0.1 * n) <= 1 and abs(n_test - 0.2 * n) <= 1


def test_temporal_split_of_fixture(fixture_graph):
    # GIVEN 10 users with 6 interactions each
    # WHEN the latest fifth of every user is held out
    bundle = split_temporal(fixture_graph, ood_fraction=0.2)

    # THEN one edge per user is OOD and the remaining five split 3:1:1
    assert bundle.counts() == {"train": 30, "valid": 10, "test_iid": 10, "test_ood": 10}
    assert bundle.kind == "temporal"
    assert_partition(bundle, fixture_graph)


def test_temporal_split_follows_time_order(fixture_graph):
    bundle = split_temporal(fixture_graph, ood_fraction=0.2)

    def latest(edges, user):
        return edges.timestamps[edges.users == user]

    for user in range(fixture_graph.n_users):
        # THEN train < valid < test_iid < test_ood in time for every user
        assert latest(bundle.train.edges, user).max() < latest(bundle.valid, user).min()
        assert latest(bundle.valid, user).max() < latest(bundle.test_iid, user).min()
        assert latest(bundle.test_iid, user).max() < latest(bundle.test_ood, user).min()


def test_temporal_split_breaks_timestamp_ties_by_item():
    # GIVEN one user with five edges sharing a timestamp
    graph = InteractionGraph.from_edges(1, 5, users=[0] * 5, items=[4, 2, 0, 1, 3], timestamps=[7] * 5)

    # WHEN the latest fifth is held out
    bundle = split_temporal(graph, ood_fraction=0.2)

    # THEN the highest item index counts as latest
    assert list(bundle.test_ood) == [(0, 4)]


def test_temporal_split_needs_timestamps():
    graph = InteractionGraph.from_edges(2, 2, users=[0, 1], items=[0, 1])

    with pytest.raises(SplitError, match="timestamps"):
        split_temporal(graph)


@pytest.mark.parametrize("fraction", [-0.1, 1.0])
def test_split_rejects_fraction_out_of_range(fraction):
    with pytest.raises(SplitError):
        split_popularity(random_graph(10, 10, 0.5), ood_fraction=fraction)


def test_popularity_split_holds_out_requested_share():
    graph = random_graph(40, 30, 0.3, seed=1)

    bundle = split_popularity(graph, ood_fraction=0.2, seed=3)

    assert len(bundle.test_ood) == int(np.floor(0.2 * graph.n_edges + 1e-9))
    assert_partition(bundle, graph)


def test_popularity_split_is_as_flat_as_possible():
    # GIVEN a graph with a very skewed item popularity
    rng = np.random.default_rng(5)
    pairs = {(int(u), int(i)) for u, i in zip(rng.integers(0, 60, 600), rng.zipf(1.6, 600) % 25)}
    users, items = zip(*sorted(pairs))
    graph = InteractionGraph.from_edges(60, 25, users, items)

    # WHEN OOD edges are drawn round-robin over items
    bundle = split_popularity(graph, ood_fraction=0.3, seed=0)

    # THEN every item gives up all its edges or at most one fewer than the most held-out item
    held = np.bincount(bundle.test_ood.items, minlength=25)
    degree = np.bincount(graph.edges.items, minlength=25)
    top = held.max()
    assert np.all(held >= np.minimum(degree, top - 1))


def test_popularity_split_is_deterministic_per_seed():
    graph = random_graph(30, 20, 0.3)

    first = split_popularity(graph, seed=11)
    second = split_popularity(graph, seed=11)
    other = split_popularity(graph, seed=12)

    assert first.test_ood.as_set() == second.test_ood.as_set()
    assert first.valid.as_set() == second.valid.as_set()
    assert first.test_ood.as_set() != other.test_ood.as_set()


def test_split_of_tiny_graph_fails():
    graph = InteractionGraph.from_edges(1, 2, users=[0], items=[0], timestamps=[1])

    with pytest.raises(SplitError, match="too small"):
        split_popularity(graph, ood_fraction=0.0)


def test_exposure_split_uses_observed_edges_as_ood():
    # GIVEN a biased graph and a disjoint fully observed edge set
    graph = random_graph(20, 20, 0.3, seed=2)
    observed = EdgeSet.from_arrays([0, 1], [0, 0]).difference(graph.edges, n_items=20)

    # WHEN split
    bundle = split_exposure(graph, observed, seed=0)

    # THEN OOD test is exactly the observed set and the biased edges are split 7:1:2
    assert bundle.test_ood.as_set() == observed.as_set()
    assert bundle.extras["overlap_removed"] == 0
    assert len(bundle.train.edges) + len(bundle.valid) + len(bundle.test_iid) == graph.n_edges


def test_exposure_split_removes_overlap_with_warning(mocker):
    # GIVEN observed edges of which two also appear in the graph
    graph = random_graph(20, 20, 0.3, seed=2)
    shared = graph.edges.subset(np.array([0, 1]))
    fresh = EdgeSet.from_arrays([19], [19]).difference(graph.edges, n_items=20)
    observed = shared.union(fresh)
    warning = mocker.patch("drgo.graph.splits.logger.warning")

    # WHEN split
    bundle = split_exposure(graph, observed)

    # THEN they leave the train side and the removal is reported
    assert bundle.extras["overlap_removed"] == 2
    assert not bundle.train.edges.contains(shared.users, shared.items, 20).any()
    assert warning.call_count == 1
    assert bundle.all_edges().as_set() == graph.edges.union(fresh).as_set()


def test_exposure_split_rejects_observed_edges_outside_graph():
    graph = random_graph(5, 5, 0.5)

    with pytest.raises(SplitError, match="outside"):
        split_exposure(graph, EdgeSet.from_arrays([5], [0]))


def test_corrupt_edges_preserves_edge_count():
    # GIVEN a graph with 30% density
    graph = random_graph(30, 30, 0.3, seed=4)

    # WHEN 20% of its edges are corrupted
    noisy = corrupt_edges(graph, 0.2, rng=0)

    # THEN as many fake edges replace the removed real ones
    n = int(np.floor(0.2 * graph.n_edges + 1e-9))
    assert len(noisy.removed) == len(noisy.added) == n
    assert noisy.graph.n_edges == graph.n_edges
    assert not graph.edges.contains(noisy.added.users, noisy.added.items, 30).any()
    assert graph.edges.contains(noisy.removed.users, noisy.removed.items, 30).all()
    assert not noisy.graph.edges.contains(noisy.removed.users, noisy.removed.items, 30).any()


def test_corrupt_edges_avoids_excluded_edges():
    # GIVEN held-out pairs covering most of the non-edges of a graph
    graph = random_graph(30, 30, 0.3, seed=4)
    held_out = random_graph(30, 30, 0.6, seed=5).edges.difference(graph.edges, 30)

    # WHEN a quarter of the edges are corrupted
    noisy = corrupt_edges(graph, 0.25, rng=1, exclude=held_out)

    # THEN no fake edge lands on a held-out pair
    assert len(noisy.added) == int(np.floor(0.25 * graph.n_edges + 1e-9))
    assert not held_out.contains(noisy.added.users, noisy.added.items, 30).any()
    assert not held_out.contains(*noisy.graph.edges.pairs().T, 30).any()


def test_corrupt_edges_without_room_outside_excluded_edges():
    graph = InteractionGraph.from_edges(2, 2, users=[0, 1], items=[0, 1])

    with pytest.raises(NoiseInjectionError, match="non-edges"):
        corrupt_edges(graph, 0.5, rng=0, exclude=EdgeSet.from_arrays([0, 1], [1, 0]))


def test_corrupt_edges_with_zero_ratio_is_identity():
    graph = random_graph(10, 10, 0.3)

    noisy = corrupt_edges(graph, 0.0, rng=0)

    assert noisy.graph is graph
    assert not len(noisy.added)


def test_inject_noise_is_deterministic():
    graph = random_graph(25, 25, 0.2)

    assert inject_noise(graph, 0.3, seed=9).edges.as_set() == inject_noise(graph, 0.3, seed=9).edges.as_set()


@pytest.mark.parametrize("ratio", [-0.1, 1.0])
def test_corrupt_edges_rejects_ratio_out_of_range(ratio):
    with pytest.raises(NoiseInjectionError):
        corrupt_edges(random_graph(10, 10, 0.3), ratio, rng=0)


def test_corrupt_edges_on_complete_graph():
    graph = InteractionGraph.from_edges(2, 2, users=[0, 0, 1, 1], items=[0, 1, 0, 1])

    with pytest.raises(NoiseInjectionError, match="non-edges"):
        corrupt_edges(graph, 0.5, rng=0)


def test_save_and_load_split(tmp_path, fixture_graph):
    # GIVEN a temporal split with node features
    features = np.arange(fixture_graph.n_nodes * 2, dtype=float).reshape(-1, 2)
    bundle = split_temporal(replace(fixture_graph, features=features))

    # WHEN saved with an extra manifest key and read back
    manifest_path = save_split(bundle, tmp_path / "split", extras={"source": "fixture"})
    loaded = load_split(tmp_path / "split")

    # THEN every part, the features and the extras survive
    manifest = json.loads(manifest_path.read_text())
    assert manifest["counts"] == bundle.counts()
    assert manifest["files"]["features"] == "features.npy"
    assert loaded.kind == "temporal"
    assert loaded.extras == {"source": "fixture"}
    assert np.array_equal(loaded.train.features, features)
    for name in ("valid", "test_iid", "test_ood"):
        assert np.array_equal(getattr(loaded, name).pairs(), getattr(bundle, name).pairs())
    assert np.array_equal(loaded.train.edges.timestamps, bundle.train.edges.timestamps)


def test_load_split_with_missing_manifest(tmp_path):
    with pytest.raises(InteractionParseError, match="manifest"):
        load_split(tmp_path)


def test_load_split_with_invalid_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text(json.dumps({"kind": "random", "n_users": 1}))

    with pytest.raises(SchemaValidationError):
        load_split(tmp_path)


def test_read_edges_of_empty_file(tmp_path):
    path = tmp_path / "edges.tsv"
    write_edges(path, EdgeSet.empty())

    assert len(read_edges(path)) == 0


def test_read_edges_rejects_non_integer_fields(tmp_path):
    path = tmp_path / "edges.tsv"
    path.write_text("0\t1\tyesterday\n")

    with pytest.raises(InteractionParseError):
        read_edges(path)

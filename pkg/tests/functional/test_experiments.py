import numpy as np
import pandas as pd
import pytest

from drgo.evaluation import experiments
from drgo.evaluation.experiments import (
    ABLATIONS,
    NOISE_GROUP,
    SWEEP_COLUMNS,
    TRACKED_GROUPS,
    ablation_study,
    decline_at,
    grid_sweep,
    grouped_benchmark,
    noise_robustness_sweep,
    relative_decline,
    weight_trajectory_experiment,
    write_report,
)
from drgo.exceptions import ConfigError
from drgo.graph import inject_noise
from drgo.models import TripletBatch
from tests.functional.conftest import SMALL_SYNTHETIC
from tests.utils import fast_config


@pytest.fixture(scope="module")
def grouped():
    return grouped_benchmark(noise_ratio=0.1, seed=0, **SMALL_SYNTHETIC)


def sweep_frame() -> pd.DataFrame:
    cells = [("erm", 0.0, 0.2), ("erm", 0.1, 0.15), ("erm", 0.2, 0.1), ("drgo", 0.0, 0.0), ("drgo", 0.1, 0.0)]
    rows = [
        {"method": method, "noise_ratio": ratio, "test_set": "ood", "metric": "recall", "k": 20, "value": value}
        for method, ratio, value in cells
    ]
    return pd.DataFrame(rows)


def test_relative_decline_against_clean_rows():
    frame = relative_decline(sweep_frame())

    assert list(frame.columns) == list(SWEEP_COLUMNS)
    assert decline_at(frame, "erm", 0.0) == 0.0
    assert decline_at(frame, "erm", 0.1) == pytest.approx(0.25)
    assert decline_at(frame, "erm", 0.2) == pytest.approx(0.5)
    # zero baseline leaves the decline undefined
    assert np.isnan(decline_at(frame, "drgo", 0.1))


def test_decline_at_missing_cell():
    with pytest.raises(KeyError):
        decline_at(relative_decline(sweep_frame()), "kl-dro", 0.1)


def test_write_report_keeps_precision(tmp_path):
    path = write_report(pd.DataFrame({"value": [0.1 + 0.2]}), tmp_path / "nested" / "report.csv")

    assert pd.read_csv(path, float_precision="round_trip")["value"].iloc[0] == 0.1 + 0.2


def test_grouped_benchmark_labels_noise(grouped):
    split = grouped.split
    n_noise = len(grouped.noise_edges)

    # noise edges sit in train only, on pairs absent from every other set
    assert n_noise > 0
    train = split.train.edges
    assert grouped.noise_edges.contains(train.users, train.items, split.n_items).sum() == n_noise
    for held_out in (split.valid, split.test_iid, split.test_ood):
        assert not grouped.noise_edges.contains(held_out.users, held_out.items, split.n_items).any()

    noise = grouped.noise_edges
    triplets = TripletBatch(users=noise.users[:3], positives=noise.items[:3], negatives=noise.items[:3])
    assert grouped.labels(triplets).tolist() == [NOISE_GROUP] * 3

    clean = split.valid
    triplets = TripletBatch(users=clean.users[:5], positives=clean.items[:5], negatives=clean.items[:5])
    assert grouped.labels(triplets).tolist() == grouped.user_groups[clean.users[:5]].tolist()

    assert grouped.grouping().names == TRACKED_GROUPS


def test_grouped_benchmark_rejects_ratio():
    with pytest.raises(ConfigError):
        grouped_benchmark(noise_ratio=1.0, **SMALL_SYNTHETIC)


def test_noise_robustness_sweep(small_split):
    frame = noise_robustness_sweep(fast_config(epochs=1), small_split, ratios=[0.1], methods=["erm"], ks=[20])

    assert list(frame.columns) == list(SWEEP_COLUMNS)
    assert sorted(frame["noise_ratio"].unique()) == [0.0, 0.1]
    assert set(frame["test_set"]) == {"iid", "ood"}
    # 2 ratios x 2 test sets x 2 metrics
    assert len(frame) == 8
    clean = frame[frame["noise_ratio"] == 0.0]["relative_decline"]
    assert ((clean == 0.0) | clean.isna()).all()


def test_noise_robustness_sweep_keeps_held_out_edges_out_of_train(mocker, small_split):
    # GIVEN every corrupted training graph of the sweep recorded
    noisy_graphs = []

    def recording(*args, **kwargs):
        graph = inject_noise(*args, **kwargs)
        noisy_graphs.append(graph)
        return graph

    mocker.patch.object(experiments, "inject_noise", side_effect=recording)

    # WHEN a quarter of the training edges are corrupted
    noise_robustness_sweep(fast_config(epochs=1), small_split, ratios=[0.25], methods=["erm"], ks=[20])

    # THEN no noisy training edge is a validation or test edge
    assert len(noisy_graphs) == 2
    n_items = small_split.n_items
    for graph in noisy_graphs:
        users, items = graph.edges.users, graph.edges.items
        for held_out in (small_split.valid, small_split.test_iid, small_split.test_ood):
            assert not held_out.contains(users, items, n_items).any()


@pytest.mark.parametrize("kwargs", [{"methods": ["dro"]}, {"ratios": [1.0]}])
def test_noise_robustness_sweep_rejects(small_split, kwargs):
    with pytest.raises(ConfigError):
        noise_robustness_sweep(fast_config(epochs=1), small_split, **kwargs)


def test_weight_trajectory_experiment(grouped):
    result = weight_trajectory_experiment(fast_config(epochs=2), grouped)

    frame = result.frame
    assert set(result.histories) == {"kl-dro", "drgo"}
    assert set(frame["group"]) == set(TRACKED_GROUPS)
    # every (method, epoch) spreads the whole weight over the three groups
    totals = frame.groupby(["method", "epoch"])["weight_share"].sum()
    assert len(totals) == 4
    assert np.allclose(totals, 1.0)
    assert 0.0 <= result.final_share("drgo") <= 1.0
    assert len(result.histories["kl-dro"].last.weights) == len(TRACKED_GROUPS)


def test_ablation_study(small_split):
    frame = ablation_study(fast_config(epochs=1), small_split, ks=[20])

    assert list(frame.columns) == ["variant", "test_set", "metric", "k", "value"]
    assert set(frame["variant"]) == set(ABLATIONS)
    assert frame["value"].between(0.0, 1.0).all()


def test_grid_sweep(small_split):
    frame = grid_sweep(fast_config(epochs=1, method="erm"), small_split, ["embed_dim"], {"embed_dim": [4, 8]}, ks=[20])

    assert list(frame.columns)[:3] == ["embed_dim", "best_epoch", "valid_recall"]
    assert sorted(frame["embed_dim"].unique()) == [4, 8]
    assert (frame["best_epoch"] == 1).all()


def test_grid_sweep_needs_values_off_grid(small_split):
    with pytest.raises(ConfigError):
        grid_sweep(fast_config(epochs=1), small_split, ["entropy_beta"])

import itertools
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigError
from ..graph import EdgeSet, SplitBundle, generate_synthetic, inject_noise, split_exposure
from ..graph.noise import sample_non_edges
from ..graph.synthetic import MAJOR_GROUP, MINOR_GROUP, TIME_HORIZON
from ..models import TripletBatch
from ..training import GRIDS, METHODS, SeedStreams, TrainConfig, TrainHistory, TripletGrouping, train
from .ranking import DEFAULT_KS, split_report

logger = logging.getLogger(__name__)

SWEEP_RATIOS = (0.05, 0.10, 0.15, 0.25)
REPORT_KEYS = ("test_set", "metric", "k")
SWEEP_COLUMNS = ("method", "noise_ratio", "test_set", "metric", "k", "value", "relative_decline")
TRAJECTORY_COLUMNS = ("method", "epoch", "group", "weight_share")

NOISE_GROUP = 2
TRACKED_GROUPS = ("major", "minor", "noise")

# variant name -> overrides on top of a drgo config
ABLATIONS: Dict[str, Dict[str, object]] = {
    "drgo": {},
    "no_diffusion": {"use_diffusion": False},
    "no_entropy": {"entropy_beta": 0.0},
    "no_features": {"use_features": False},
}


def write_report(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV in the frame's column order, floats at full precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    return path


def _noise_stream_key(ratio: float) -> int:
    return int(round(ratio * 1_000_000))


def relative_decline(frame: pd.DataFrame) -> pd.DataFrame:
    """Add (clean - noisy) / clean per method and metric, against the noise_ratio == 0 rows"""
    keys = ["method", *REPORT_KEYS]
    baseline = frame.loc[frame["noise_ratio"] == 0.0, [*keys, "value"]].rename(columns={"value": "baseline"})
    merged = frame.drop(columns="relative_decline", errors="ignore").merge(baseline, on=keys, how="left")
    with np.errstate(divide="ignore", invalid="ignore"):
        merged["relative_decline"] = (merged["baseline"] - merged["value"]) / merged["baseline"]
    return merged[list(SWEEP_COLUMNS)]


def noise_robustness_sweep(
    config: TrainConfig,
    split: SplitBundle,
    ratios: Sequence[float] = SWEEP_RATIOS,
    methods: Sequence[str] = METHODS,
    ks: Sequence[int] = DEFAULT_KS,
) -> pd.DataFrame:
    """Retrain every method on noise-corrupted copies of the training graph and evaluate both test sets

    A clean run (ratio 0) is always included and anchors the relative decline. The corruption of a
    ratio depends only on the root seed and the ratio, so every method sees the same noisy graph.
    Fake edges never land on a validation or test edge.

    Raises
    ------
    ConfigError
        When a method is unknown or a ratio lies outside [0, 1)
    """
    unknown = sorted(set(methods) - set(METHODS))
    if unknown:
        raise ConfigError(f"unknown methods: {', '.join(unknown)}")
    if any(not 0.0 <= ratio < 1.0 for ratio in ratios):
        raise ConfigError(f"noise ratios must lie in [0, 1), got {list(ratios)}")

    streams = SeedStreams(config.seed)
    rows: List[Dict[str, object]] = []
    held_out = split.held_out_edges()
    for ratio in sorted({0.0, *map(float, ratios)}):
        noisy_train = inject_noise(
            split.train, ratio, streams.generator("noise", _noise_stream_key(ratio)), exclude=held_out
        )
        noisy_split = replace(split, train=noisy_train)
        for method in methods:
            logger.info("Sweep cell started", extra={"method": method, "noise_ratio": ratio})
            model, _ = train(config.with_overrides({"method": method}), noisy_split)
            rows.extend(split_report(model.score_matrix(), noisy_split, ks, method=method, noise_ratio=ratio))

    frame = pd.DataFrame(rows, columns=[column for column in SWEEP_COLUMNS if column != "relative_decline"])
    return relative_decline(frame)


def decline_at(
    frame: pd.DataFrame, method: str, ratio: float, test_set: str = "ood", metric: str = "recall", k: int = 20
) -> float:
    """Relative decline of one sweep cell"""
    selected = frame[
        (frame["method"] == method)
        & np.isclose(frame["noise_ratio"], ratio)
        & (frame["test_set"] == test_set)
        & (frame["metric"] == metric)
        & (frame["k"] == k)
    ]
    if len(selected) != 1:
        raise KeyError(f"no single sweep row for {method} at {ratio} ({test_set} {metric}@{k})")
    return float(selected["relative_decline"].iloc[0])


@dataclass(frozen=True, eq=False)
class GroupedSplit:
    """Split whose training graph carries labelled noise edges on top of major and minor user groups"""

    split: SplitBundle
    noise_edges: EdgeSet
    user_groups: np.ndarray

    def labels(self, triplets: TripletBatch) -> np.ndarray:
        """major / minor by the triplet's user, noise when its positive is an injected edge"""
        labels = np.asarray(self.user_groups, dtype=np.int64)[triplets.users]
        labels[self.noise_edges.contains(triplets.users, triplets.positives, self.split.n_items)] = NOISE_GROUP
        return labels

    def grouping(self) -> TripletGrouping:
        return TripletGrouping(n_groups=len(TRACKED_GROUPS), label=self.labels, names=TRACKED_GROUPS)


def grouped_benchmark(noise_ratio: float = 0.1, seed: int = 0, **synthetic) -> GroupedSplit:
    """Synthetic exposure split with 90/10 activity groups and `noise_ratio` extra noise edges in train

    Noise edges avoid every edge of the split, validation and test sets included.

    Parameters
    ----------
    noise_ratio : float
        injected edges as a share of the clean training edges, in [0, 1)
    seed : int
        generator, split and noise seed
    synthetic
        forwarded to `generate_synthetic`
    """
    if not 0.0 <= noise_ratio < 1.0:
        raise ConfigError(f"noise_ratio must lie in [0, 1), got {noise_ratio}")
    benchmark = generate_synthetic(noise_ratio=0.0, seed=seed, **synthetic)
    split = split_exposure(benchmark.graph, benchmark.fully_observed, seed=seed)

    rng = np.random.default_rng([seed, _noise_stream_key(noise_ratio)])
    n_noise = int(math.floor(noise_ratio * split.train.n_edges + 1e-9))
    keys = sample_non_edges(split.train.with_edges(split.all_edges()), n_noise, rng)
    n_items = split.n_items
    noise = EdgeSet.from_arrays(keys // n_items, keys % n_items, rng.integers(1, TIME_HORIZON, size=n_noise))
    train_graph = split.train.with_edges(split.train.edges.union(noise))
    logger.debug(
        "Grouped benchmark ready",
        extra={
            "major_users": int(np.sum(benchmark.user_groups == MAJOR_GROUP)),
            "minor_users": int(np.sum(benchmark.user_groups == MINOR_GROUP)),
            "noise_edges": n_noise,
        },
    )
    return GroupedSplit(split=replace(split, train=train_graph), noise_edges=noise, user_groups=benchmark.user_groups)


@dataclass
class TrajectoryResult:
    """Per-epoch share of effective triplet weight on the major, minor and noise groups"""

    frame: pd.DataFrame
    histories: Dict[str, TrainHistory]

    def final_share(self, method: str, group: str = "noise") -> float:
        rows = self.frame[(self.frame["method"] == method) & (self.frame["group"] == group)]
        return float(rows.sort_values("epoch")["weight_share"].iloc[-1])


def weight_trajectory_experiment(config: TrainConfig, grouped: GroupedSplit) -> TrajectoryResult:
    """Train plain KL-DRO over the labelled groups and DRGO over its own clusters, tracking both

    Plain DRO reweights the three labelled groups directly, DRGO reweights its k-means clusters; for
    both the effective weight of every triplet is attributed to its labelled group.
    """
    grouping = grouped.grouping()
    runs = {
        "kl-dro": dict(config=config.with_overrides({"method": "kl-dro"}), grouping=grouping),
        "drgo": dict(config=config.with_overrides({"method": "drgo"}), grouping=None),
    }
    rows: List[Dict[str, object]] = []
    histories: Dict[str, TrainHistory] = {}
    for method, run in runs.items():
        logger.info("Trajectory run started", extra={"method": method})
        _, history = train(run["config"], grouped.split, grouping=run["grouping"], tracker=grouping)
        histories[method] = history
        for record in history:
            for group, share in zip(TRACKED_GROUPS, record.tracked_weights):
                rows.append({"method": method, "epoch": record.epoch, "group": group, "weight_share": share})
    return TrajectoryResult(frame=pd.DataFrame(rows, columns=list(TRAJECTORY_COLUMNS)), histories=histories)


def ablation_study(config: TrainConfig, split: SplitBundle, ks: Sequence[int] = DEFAULT_KS) -> pd.DataFrame:
    """DRGO against its variants without diffusion, without the entropy term and without node features"""
    base = config.with_overrides({"method": "drgo"})
    rows: List[Dict[str, object]] = []
    for variant, overrides in ABLATIONS.items():
        logger.info("Ablation run started", extra={"variant": variant})
        model, _ = train(base.with_overrides(overrides), split)
        rows.extend(split_report(model.score_matrix(), split, ks, variant=variant))
    return pd.DataFrame(rows, columns=["variant", *REPORT_KEYS, "value"])


def grid_sweep(
    config: TrainConfig,
    split: SplitBundle,
    keys: Sequence[str],
    values: Optional[Mapping[str, Sequence]] = None,
    ks: Sequence[int] = DEFAULT_KS,
) -> pd.DataFrame:
    """One training run per cell of the cartesian product over `keys`

    Values come from `values` when given for a key, else from the published grid.

    Raises
    ------
    ConfigError
        When a key has neither explicit values nor a published grid
    """
    values = dict(values or {})
    axes = []
    for key in keys:
        if key not in values and key not in GRIDS:
            raise ConfigError(f"no grid for {key}, pass explicit values")
        axes.append(list(values.get(key, GRIDS.get(key, ()))))

    rows: List[Dict[str, object]] = []
    for cell in itertools.product(*axes):
        overrides = dict(zip(keys, cell))
        logger.info("Grid cell started", extra={"cell": overrides})
        model, history = train(config.with_overrides(overrides), split)
        best = next((record for record in history if record.epoch == history.best_epoch), history.last)
        labels = {**overrides, "best_epoch": history.best_epoch, "valid_recall": best.valid_recall}
        rows.extend(split_report(model.score_matrix(), split, ks, **labels))
    return pd.DataFrame(rows, columns=[*keys, "best_epoch", "valid_recall", *REPORT_KEYS, "value"])

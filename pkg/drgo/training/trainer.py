import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..autodiff import (
    AdamW,
    DomainError,
    NonFiniteError,
    Tape,
    Tensor,
    add,
    concat_rows,
    gather_rows,
    matmul,
    parameter,
    read_checkpoint,
    save_checkpoint,
    scale,
    sum_,
)
from ..dro import (
    InfeasibleRadiusError,
    NominalDistribution,
    PointCloud,
    SinkhornConvergenceError,
    UncertaintySet,
    build_nominal,
    entropy,
    group_losses,
    kl_dro_weights,
    kmeans,
    sinkhorn_distance,
    worst_case_weights,
)
from ..evaluation.ranking import evaluate
from ..exceptions import ConfigError
from ..graph import EmptyGraphError, InteractionGraph, SplitBundle, betweenness_centrality
from ..metrics import Metrics, MetricUnit
from ..models import (
    BackboneModel,
    DenoiserParams,
    DiffusionSchedule,
    EncoderParams,
    Propagated,
    TripletBatch,
    bpr_terms,
    corrupt_and_denoise,
    encode,
    make_schedule,
    node_features,
    pair_scores,
    propagate,
    reparameterize,
    sample_latent,
    sample_loss,
    sample_triplets,
    score_all,
    vgae_loss,
)
from .config import TrainConfig
from .exceptions import TrainingDivergenceError
from .history import EpochRecord, TrainHistory
from .seeds import SeedStreams

logger = logging.getLogger(__name__)

VALID_K = 20
SINKHORN_TOL = 1e-6
PROJECTION_INIT = 0.1
# failures inside an epoch that abort the run as a divergence
DIVERGENCE_ERRORS = (NonFiniteError, DomainError, SinkhornConvergenceError, InfeasibleRadiusError)

Operand = Union[Tensor, float]


@dataclass(frozen=True)
class TripletGrouping:
    """Labels each triplet of a batch with one of `n_groups` groups

    Used to override the cluster grouping (KL-DRO over known groups) or, as a tracker, to report how
    the effective triplet weight spreads over externally known groups.
    """

    n_groups: int
    label: Callable[[TripletBatch], np.ndarray]
    names: Tuple[str, ...] = ()


@dataclass
class DrgoModel:
    """Trainable state of a run

    ERM and KL-DRO runs only carry the backbone. DRGO runs add the encoder, its input features, the
    denoiser, and a (d, d) projection through which the latest denoised latent `latent` enters the
    backbone's initial embeddings.
    """

    backbone: BackboneModel
    encoder: Optional[EncoderParams] = None
    features: Optional[Tensor] = None
    denoiser: Optional[DenoiserParams] = None
    projection: Optional[Tensor] = None
    latent: Optional[np.ndarray] = None

    def parameters(self) -> List[Tensor]:
        params = list(self.backbone.parameters())
        if self.encoder is not None:
            params.extend(self.encoder.parameters())
        if self.features is not None and self.features.requires_grad:
            params.append(self.features)
        if self.denoiser is not None:
            params.extend(self.denoiser.parameters())
        if self.projection is not None:
            params.append(self.projection)
        return params

    def initial_embeddings(self) -> Tensor:
        free = concat_rows([self.backbone.user_embeddings, self.backbone.item_embeddings])
        if self.latent is None or self.projection is None:
            return free
        return add(free, matmul(self.latent, self.projection))

    def propagated(self) -> Propagated:
        return propagate(self.backbone, self.initial_embeddings())

    def score_matrix(self) -> np.ndarray:
        """(n_users, n_items) scores of the current state"""
        return score_all(self.propagated())

    def named_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {param.name: param.value.copy() for param in self.parameters()}
        if self.latent is not None:
            arrays["latent"] = self.latent.copy()
        return arrays

    def restore(self, arrays: Dict[str, np.ndarray]) -> None:
        for param in self.parameters():
            param.value = arrays[param.name].copy()
        self.latent = arrays["latent"].copy() if "latent" in arrays else None

    def save(self, path: Union[str, Path], config: Optional[TrainConfig] = None) -> Path:
        metadata = {"n_layers": self.backbone.n_layers}
        if config is not None:
            metadata["config"] = config.dict()
        return save_checkpoint(path, self.named_arrays(), metadata=metadata)

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], graph: InteractionGraph, n_layers: int) -> "DrgoModel":
        """Scoring-only model: backbone, projection and latent; the encoder and denoiser aren't rebuilt"""
        backbone = BackboneModel(
            user_embeddings=parameter(arrays["user_embeddings"], name="user_embeddings"),
            item_embeddings=parameter(arrays["item_embeddings"], name="item_embeddings"),
            adjacency=graph.normalized,
            n_layers=n_layers,
        )
        projection = parameter(arrays["projection"], name="projection") if "projection" in arrays else None
        return cls(backbone=backbone, projection=projection, latent=arrays.get("latent"))

    @classmethod
    def load(cls, path: Union[str, Path], graph: InteractionGraph) -> "DrgoModel":
        """Raises CheckpointError when the file is truncated or malformed"""
        arrays, metadata = read_checkpoint(path)
        return cls.from_arrays(arrays, graph, int(metadata.get("n_layers", 3)))


def build_model(config: TrainConfig, graph: InteractionGraph, streams: SeedStreams) -> DrgoModel:
    rng = streams.generator("init")
    backbone = BackboneModel.initialize(graph, config.embed_dim, config.n_layers, rng)
    if not config.denoising:
        return DrgoModel(backbone=backbone)

    features = node_features(graph, config.use_features, config.feature_dim, rng)
    encoder = EncoderParams.initialize(features.shape[1], config.vgae_hidden_dim, config.embed_dim, rng)
    denoiser = DenoiserParams.initialize(config.embed_dim, rng) if config.use_diffusion else None
    projection = parameter(PROJECTION_INIT * np.eye(config.embed_dim), name="projection")
    return DrgoModel(backbone=backbone, encoder=encoder, features=features, denoiser=denoiser, projection=projection)


def total_loss(
    losses: Sequence[Operand],
    weights: np.ndarray,
    beta: float,
    vgae: Operand = 0.0,
    diffusion: Operand = 0.0,
) -> Tensor:
    """sum_i w_i L_i + beta * H(w) + VGAE loss + diffusion loss

    Weights are constants here: they come from the inner maximization and take no gradient.
    """
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(losses) != len(weights):
        raise ValueError(f"{len(losses)} group losses but {len(weights)} weights")
    weighted: Operand = 0.0
    for weight, loss in zip(weights, losses):
        weighted = add(weighted, scale(loss, float(weight)))
    return add(add(add(weighted, beta * entropy(weights)), vgae), diffusion)


@dataclass
class EpochState:
    """Grouping, nominal distribution and radius fixed for the batches of one epoch"""

    n_groups: int
    assignment: Optional[np.ndarray] = None
    clusters: Optional[UncertaintySet] = None
    nominal: Optional[NominalDistribution] = None
    radius: float = math.inf


class Trainer:
    """Alternates worst-case group weights and AdamW steps over sampled BPR triplets

    Parameters
    ----------
    config : TrainConfig
        run configuration
    split : SplitBundle
        training graph and validation edges
    grouping : TripletGrouping, optional
        fixed triplet groups replacing the per-epoch clustering (KL-DRO only)
    tracker : TripletGrouping, optional
        groups over which the effective triplet weight share is recorded
    metrics : Metrics, optional
        receives one flushed document per epoch; created when `config.emit_metrics` is set
    """

    def __init__(
        self,
        config: TrainConfig,
        split: SplitBundle,
        grouping: Optional[TripletGrouping] = None,
        tracker: Optional[TripletGrouping] = None,
        metrics: Optional[Metrics] = None,
    ):
        if not split.train.n_edges:
            raise EmptyGraphError("training graph has no edges")
        if grouping is not None and config.method != "kl-dro":
            raise ConfigError("fixed triplet groups apply to kl-dro runs only")
        self.config = config
        self.split = split
        self.graph = split.train
        self.grouping = grouping
        self.tracker = tracker
        self.metrics = metrics if metrics is not None or not config.emit_metrics else Metrics(service="trainer")
        if self.metrics is not None:
            self.metrics.set_default_dimensions(method=config.method, split=split.kind)

        self.streams = SeedStreams(config.seed)
        self.model = build_model(config, self.graph, self.streams)
        self.optimizer = AdamW(self.model.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
        self.sampler = self.streams.generator("sampling")
        self.schedule: Optional[DiffusionSchedule] = None
        if self.model.denoiser is not None:
            self.schedule = make_schedule(config.diffusion_steps, config.beta_start, config.beta_end)
        self._base_nominal: Optional[NominalDistribution] = None
        if config.method == "erm":
            self.n_groups = 1
        elif grouping is not None:
            self.n_groups = grouping.n_groups
        else:
            self.n_groups = config.n_clusters

    @property
    def n_batches(self) -> int:
        return max(1, math.ceil(self.graph.n_edges / self.config.batch_size))

    def _denoised_latent(self, rng: np.random.Generator) -> np.ndarray:
        mu, sigma = encode(self.graph.normalized, self.model.features, self.model.encoder)
        latent = sample_latent(mu, sigma, rng).e0.value
        if self.model.denoiser is None:
            return latent
        return corrupt_and_denoise(latent, self.config.start_step, self.schedule, self.model.denoiser, rng)

    def prepare_epoch(self, epoch: int, rng: np.random.Generator) -> EpochState:
        """Refresh the latent, the clusters, the nominal distribution and the radius"""
        config = self.config
        if config.method == "erm":
            return EpochState(n_groups=1, assignment=np.zeros(self.graph.n_users, dtype=np.int64))
        if self.grouping is not None:
            return EpochState(n_groups=self.n_groups)

        cluster_seed = self.streams.generator("cluster", epoch)
        if config.method == "kl-dro":
            users = self.model.propagated().users.value
            clusters = kmeans(users, self.n_groups, config.kmeans_max_iter, cluster_seed)
            return EpochState(n_groups=self.n_groups, assignment=clusters.assignment, clusters=clusters)

        denoised = self._denoised_latent(rng)
        self.model.latent = denoised
        clusters = kmeans(denoised[: self.graph.n_users], self.n_groups, config.kmeans_max_iter, cluster_seed)
        if self._base_nominal is None:
            centrality = betweenness_centrality(self.graph)
            self._base_nominal = build_nominal(centrality, denoised, config.top_pct)
        nominal = self._base_nominal.with_embeddings(denoised)

        radius = config.rho
        if config.relative_radius:
            uniform = PointCloud.uniform(clusters.centroids)
            baseline = sinkhorn_distance(
                PointCloud(nominal.embeddings, nominal.weights), uniform, config.sinkhorn_lambda, tol=SINKHORN_TOL
            ).distance
            radius = (1.0 + config.rho) * baseline
        logger.debug(
            "Epoch grouping refreshed",
            extra={"epoch": epoch, "inertia": clusters.inertia, "radius": radius, "nominal_size": len(nominal)},
        )
        return EpochState(
            n_groups=self.n_groups,
            assignment=clusters.assignment,
            clusters=clusters,
            nominal=nominal,
            radius=radius,
        )

    def _labels(self, triplets: TripletBatch, state: EpochState) -> np.ndarray:
        if self.grouping is not None:
            return np.asarray(self.grouping.label(triplets), dtype=np.int64)
        return state.assignment[triplets.users]

    def group_weights(self, losses: np.ndarray, state: EpochState) -> Tuple[np.ndarray, Optional[float]]:
        config = self.config
        if state.n_groups == 1:
            return np.ones(1), None
        if config.method == "kl-dro":
            return kl_dro_weights(losses, config.kl_radius), None
        update = worst_case_weights(
            losses,
            config.entropy_beta,
            state.radius,
            state.nominal,
            state.clusters.centroids,
            lam=config.sinkhorn_lambda,
            tol=SINKHORN_TOL,
        )
        return update.weights, update.distance

    def step(self, triplets: TripletBatch, state: EpochState, rng: np.random.Generator) -> Dict[str, object]:
        """One forward, backward and AdamW update; returns the batch's scalar summaries"""
        config = self.config
        model = self.model
        with Tape() as tape:
            embeddings = model.propagated()
            terms = bpr_terms(
                pair_scores(embeddings, triplets.users, triplets.positives),
                pair_scores(embeddings, triplets.users, triplets.negatives),
            )
            labels = self._labels(triplets, state)
            batch_groups = group_losses(terms.value, np.arange(len(labels)), labels, state.n_groups)
            weights, distance = self.group_weights(batch_groups.values, state)

            losses: List[Operand] = []
            for group in range(state.n_groups):
                members = np.flatnonzero(labels == group)
                if members.size:
                    losses.append(scale(sum_(gather_rows(terms, members)), 1.0 / members.size))
                else:
                    losses.append(0.0)

            vgae: Operand = 0.0
            diffusion: Operand = 0.0
            if config.denoising:
                mu, sigma = encode(self.graph.normalized, model.features, model.encoder)
                latent = reparameterize(mu, sigma, rng=rng)
                vgae = vgae_loss(latent, self.graph.adjacency, mu, sigma, rng=rng)
                if model.denoiser is not None:
                    diffusion = scale(sample_loss(latent, self.schedule, model.denoiser, rng), 1.0 / latent.size)

            beta = config.entropy_beta if config.denoising else 0.0
            loss = total_loss(losses, weights, beta, vgae, diffusion)
            if not np.isfinite(loss.value):
                raise NonFiniteError(f"loss is {float(loss.value)}")
            tape.backward(loss)
        self.optimizer.step()

        summary: Dict[str, object] = {
            "total_loss": float(loss.value),
            "rec_loss": float(np.dot(weights, batch_groups.values)),
            "entropy_term": float(beta * entropy(weights)),
            "vgae_loss": float(np.asarray(getattr(vgae, "value", vgae))),
            "sample_loss": float(np.asarray(getattr(diffusion, "value", diffusion))),
            "sinkhorn_distance": distance,
            "weights": weights,
            "group_losses": batch_groups.values,
        }
        if self.tracker is not None:
            coefficients = batch_groups.triplet_coefficients(weights, labels)
            tracked = np.bincount(
                self.tracker.label(triplets), weights=coefficients, minlength=self.tracker.n_groups
            )
            summary["tracked_weights"] = tracked / tracked.sum()
        return summary

    def validate(self) -> float:
        if not len(self.split.valid):
            return float("nan")
        report = evaluate(self.model.score_matrix(), self.graph, self.split.valid, ks=(VALID_K,))
        return report.recall[VALID_K]

    def run_epoch(self, epoch: int) -> EpochRecord:
        rng = self.streams.generator("diffusion", epoch)
        try:
            state = self.prepare_epoch(epoch, rng)
        except DIVERGENCE_ERRORS as exc:
            raise TrainingDivergenceError(epoch, None, str(exc)) from exc
        summaries = []
        for batch in range(self.n_batches):
            triplets = sample_triplets(self.graph, self.config.batch_size, self.sampler)
            try:
                summaries.append(self.step(triplets, state, rng))
            except DIVERGENCE_ERRORS as exc:
                raise TrainingDivergenceError(epoch, batch, str(exc)) from exc

        def average(key: str):
            values = [summary[key] for summary in summaries if summary.get(key) is not None]
            if not values:
                return None
            return np.mean(np.asarray(values, dtype=np.float64), axis=0)

        distance = average("sinkhorn_distance")
        tracked = average("tracked_weights")
        return EpochRecord(
            epoch=epoch,
            total_loss=float(average("total_loss")),
            rec_loss=float(average("rec_loss")),
            entropy_term=float(average("entropy_term")),
            vgae_loss=float(average("vgae_loss")),
            sample_loss=float(average("sample_loss")),
            sinkhorn_distance=None if distance is None else float(distance),
            valid_recall=self.validate(),
            weights=tuple(float(value) for value in average("weights")),
            group_losses=tuple(float(value) for value in average("group_losses")),
            tracked_weights=() if tracked is None else tuple(float(value) for value in tracked),
        )

    def _emit(self, record: EpochRecord, duration: float) -> None:
        if self.metrics is None:
            return
        self.metrics.add_metric(name="TotalLoss", unit=MetricUnit.None_, value=record.total_loss)
        self.metrics.add_metric(name="RecLoss", unit=MetricUnit.None_, value=record.rec_loss)
        self.metrics.add_metric(name="EpochDuration", unit=MetricUnit.Seconds, value=duration)
        if not math.isnan(record.valid_recall):
            self.metrics.add_metric(name="ValidRecall", unit=MetricUnit.None_, value=record.valid_recall)
        if record.sinkhorn_distance is not None:
            self.metrics.add_metric(name="SinkhornDistance", unit=MetricUnit.None_, value=record.sinkhorn_distance)
        self.metrics.add_metadata(key="epoch", value=record.epoch)
        self.metrics.flush()

    def fit(self) -> Tuple[DrgoModel, TrainHistory]:
        """Train for `config.epochs` with early stopping on validation Recall@20

        The returned model holds the parameters of the best validation epoch (the last epoch when
        there is no validation set).

        Raises
        ------
        TrainingDivergenceError
            When a loss or gradient becomes non-finite
        """
        config = self.config
        history = TrainHistory()
        best_recall, best_arrays, stale = -math.inf, None, 0
        logger.info(
            "Training started",
            extra={
                "method": config.method,
                "epochs": config.epochs,
                "batches": self.n_batches,
                "groups": self.n_groups,
            },
        )
        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            record = self.run_epoch(epoch)
            history.append(record)
            self._emit(record, time.perf_counter() - started)
            logger.info(
                f"Epoch {epoch} done",
                extra={"epoch": epoch, "total_loss": record.total_loss, "valid_recall": record.valid_recall},
            )

            recall = record.valid_recall
            if math.isnan(recall) or recall > best_recall:
                best_recall = recall if not math.isnan(recall) else best_recall
                best_arrays, history.best_epoch, stale = self.model.named_arrays(), epoch, 0
                continue
            stale += 1
            if stale >= config.patience:
                history.stopped_early = True
                logger.info("Early stopping", extra={"epoch": epoch, "best_epoch": history.best_epoch})
                break

        if best_arrays is not None:
            self.model.restore(best_arrays)
        return self.model, history


def train(
    config: TrainConfig,
    split: SplitBundle,
    grouping: Optional[TripletGrouping] = None,
    tracker: Optional[TripletGrouping] = None,
    metrics: Optional[Metrics] = None,
) -> Tuple[DrgoModel, TrainHistory]:
    """Build a `Trainer` and fit it, see `Trainer` for the parameters"""
    return Trainer(config, split, grouping=grouping, tracker=tracker, metrics=metrics).fit()

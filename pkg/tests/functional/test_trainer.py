import io
import json

import numpy as np
import pytest

from drgo import Metrics
from drgo.autodiff import NonFiniteError, Tensor, gather_rows, grad_check, scale, sum_
from drgo.dro import InfeasibleRadiusError, SinkhornConvergenceError
from drgo.exceptions import ConfigError
from drgo.graph import EmptyGraphError, InteractionGraph
from drgo.models import (
    BackboneModel,
    DenoiserParams,
    EncoderParams,
    bpr_terms,
    encode,
    make_schedule,
    pair_scores,
    propagate,
    reparameterize,
    sample_loss,
    vgae_loss,
)
from drgo.training import DrgoModel, Trainer, TrainingDivergenceError, TripletGrouping, total_loss, train
from tests.utils import empty_split, fast_config


def by_user_parity(triplets) -> np.ndarray:
    return np.asarray(triplets.users) % 2


def test_erm_run(erm_config, small_split):
    model, history = train(erm_config, small_split)

    assert [record.epoch for record in history] == [1, 2]
    for record in history:
        assert record.weights == (1.0,)
        assert record.sinkhorn_distance is None
        assert record.vgae_loss == 0.0 and record.sample_loss == 0.0
        assert np.isfinite(record.total_loss) and record.total_loss > 0
        assert 0.0 <= record.valid_recall <= 1.0
    assert model.encoder is None and model.latent is None
    assert model.score_matrix().shape == (small_split.n_users, small_split.n_items)


def test_drgo_run(drgo_config, small_split):
    model, history = train(drgo_config, small_split)

    record = history.last
    assert len(record.weights) == drgo_config.n_clusters
    assert sum(record.weights) == pytest.approx(1.0)
    assert record.sinkhorn_distance is not None and record.sinkhorn_distance >= 0.0
    assert record.vgae_loss > 0.0 and record.sample_loss > 0.0
    assert record.entropy_term >= 0.0
    assert model.latent.shape == (small_split.n_users + small_split.n_items, drgo_config.embed_dim)


def test_kl_dro_run(small_split):
    _, history = train(fast_config(method="kl-dro", epochs=1), small_split)

    record = history.last
    assert len(record.weights) == 3
    assert sum(record.weights) == pytest.approx(1.0)
    assert record.sinkhorn_distance is None


def test_drgo_without_diffusion(small_split):
    trainer = Trainer(fast_config(method="drgo", use_diffusion=False, epochs=1), small_split)

    _, history = trainer.fit()

    assert trainer.model.denoiser is None and trainer.schedule is None
    assert history.last.sample_loss == 0.0


def test_same_seed_same_history(small_split):
    config = fast_config(method="drgo", epochs=1, seed=3)

    first_model, first = train(config, small_split)
    second_model, second = train(config, small_split)

    assert first.records == second.records
    assert np.array_equal(first_model.score_matrix(), second_model.score_matrix())


def test_early_stopping_restores_best_epoch(mocker, small_split):
    # GIVEN validation recall that only gets worse after the first epoch
    mocker.patch.object(Trainer, "validate", side_effect=[0.3, 0.2, 0.1, 0.05, 0.01])
    config = fast_config(method="erm", epochs=5, patience=2)

    _, history = train(config, small_split)

    # THEN training stops after two stale epochs and reports the first
    assert len(history) == 3
    assert history.stopped_early
    assert history.best_epoch == 1


def test_best_parameters_are_restored(mocker, small_split):
    trainer = Trainer(fast_config(method="erm", epochs=3), small_split)
    mocker.patch.object(trainer, "validate", side_effect=[0.1, 0.5, 0.2])
    snapshots = []
    run_epoch = trainer.run_epoch

    def recording_epoch(epoch):
        record = run_epoch(epoch)
        snapshots.append(trainer.model.named_arrays())
        return record

    mocker.patch.object(trainer, "run_epoch", side_effect=recording_epoch)

    model, history = trainer.fit()

    assert history.best_epoch == 2
    for name, value in model.named_arrays().items():
        assert np.array_equal(value, snapshots[1][name])


def test_non_finite_step_is_reported_as_divergence(mocker, erm_config, small_split):
    mocker.patch.object(Trainer, "step", side_effect=NonFiniteError("loss is nan"))

    with pytest.raises(TrainingDivergenceError) as exc:
        train(erm_config, small_split)

    assert (exc.value.epoch, exc.value.batch) == (1, 0)
    assert exc.value.exit_code == 4
    assert "loss is nan" in str(exc.value)


def test_sinkhorn_failure_in_a_step_is_reported_as_divergence(mocker, drgo_config, small_split):
    mocker.patch.object(Trainer, "step", side_effect=SinkhornConvergenceError(residual=1e-2, iterations=500))

    with pytest.raises(TrainingDivergenceError) as exc:
        train(drgo_config, small_split)

    assert (exc.value.epoch, exc.value.batch) == (1, 0)
    assert exc.value.exit_code == 4
    assert "Sinkhorn did not converge" in str(exc.value)


def test_infeasible_radius_while_preparing_an_epoch_is_reported_as_divergence(mocker, drgo_config, small_split):
    mocker.patch.object(Trainer, "prepare_epoch", side_effect=InfeasibleRadiusError(distance=1.0, radius=0.5))

    with pytest.raises(TrainingDivergenceError) as exc:
        train(drgo_config, small_split)

    assert (exc.value.epoch, exc.value.batch) == (1, None)
    assert "training diverged at epoch 1:" in str(exc.value)


def test_metrics_document_per_epoch(erm_config, small_split):
    stream = io.StringIO()
    metrics = Metrics(namespace="drgo_test", stream=stream)

    train(erm_config, small_split, metrics=metrics)

    documents = [json.loads(line) for line in stream.getvalue().splitlines()]
    assert [document["epoch"] for document in documents] == [1, 2]
    for document in documents:
        assert (document["method"], document["split"]) == ("erm", "popularity")
        assert {"TotalLoss", "RecLoss", "EpochDuration", "ValidRecall"} <= set(document)
        assert "SinkhornDistance" not in document


def test_fixed_grouping_and_tracker(small_split):
    grouping = TripletGrouping(n_groups=2, label=by_user_parity, names=("even", "odd"))

    _, history = train(fast_config(method="kl-dro", epochs=1), small_split, grouping=grouping, tracker=grouping)

    record = history.last
    assert len(record.weights) == 2
    assert len(record.tracked_weights) == 2
    assert sum(record.tracked_weights) == pytest.approx(1.0)


def test_fixed_grouping_needs_kl_dro(drgo_config, small_split):
    grouping = TripletGrouping(n_groups=2, label=by_user_parity)

    with pytest.raises(ConfigError):
        Trainer(drgo_config, small_split, grouping=grouping)


def test_empty_training_graph(erm_config):
    with pytest.raises(EmptyGraphError):
        Trainer(erm_config, empty_split())


def test_checkpoint_round_trip(tmp_path, small_split):
    config = fast_config(method="drgo", epochs=1)
    model, _ = train(config, small_split)

    path = model.save(tmp_path / "model.ckpt", config)
    loaded = DrgoModel.load(path, small_split.train)

    assert loaded.backbone.n_layers == config.n_layers
    assert np.allclose(loaded.score_matrix(), model.score_matrix())


def test_total_loss():
    losses = [Tensor(0.5), Tensor(2.0)]
    weights = np.array([0.25, 0.75])

    loss = total_loss(losses, weights, beta=0.1, vgae=Tensor(0.3), diffusion=0.2)

    entropy = -np.sum(weights * np.log(weights))
    assert loss.item() == pytest.approx(0.25 * 0.5 + 0.75 * 2.0 + 0.1 * entropy + 0.3 + 0.2)
    with pytest.raises(ValueError):
        total_loss(losses, np.ones(3) / 3, beta=0.1)


def test_joint_objective_gradient():
    # GIVEN a 5-node graph (2 users, 3 items) and users split into two groups by index
    graph = InteractionGraph.from_edges(2, 3, users=[0, 0, 1, 1], items=[0, 1, 1, 2])
    rng = np.random.default_rng(11)
    backbone = BackboneModel.initialize(graph, embed_dim=2, n_layers=2, rng=rng)
    features = rng.normal(size=(5, 3))
    noise = rng.normal(size=(5, 2))
    encoder = EncoderParams.initialize(3, 3, 2, rng)
    denoiser = DenoiserParams.initialize(2, rng)
    schedule = make_schedule(10)
    users, positives, negatives = np.array([0, 1, 0, 1]), np.array([0, 2, 1, 1]), np.array([2, 0, 2, 0])
    weights = np.array([0.4, 0.6])
    n_encoder = len(encoder.parameters())
    point = [
        rng.normal(scale=0.5, size=(5, 2)),
        *[param.value for param in encoder.parameters()],
        *[param.value for param in denoiser.parameters()],
    ]

    def objective(e0, *params):
        embeddings = propagate(backbone, initial=e0)
        terms = bpr_terms(pair_scores(embeddings, users, positives), pair_scores(embeddings, users, negatives))
        losses = [scale(sum_(gather_rows(terms, np.flatnonzero(users == group))), 0.5) for group in (0, 1)]
        mu, sigma = encode(graph.normalized, features, EncoderParams(*params[:n_encoder]))
        latent = reparameterize(mu, sigma, noise=noise)
        vgae = vgae_loss(latent, graph.adjacency, mu, sigma, dense=True)
        diffusion = sample_loss(latent, schedule, DenoiserParams(*params[n_encoder:]), np.random.default_rng(5))
        return total_loss(losses, weights, beta=0.1, vgae=vgae, diffusion=scale(diffusion, 1.0 / latent.size))

    # THEN weighted group BPR, entropy, VGAE and diffusion terms differentiate correctly together
    assert grad_check(objective, point) < 1e-4

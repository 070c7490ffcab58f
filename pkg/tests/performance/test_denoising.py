import numpy as np
import pytest

from drgo.autodiff import AdamW, Tape, scale
from drgo.models import DenoiserParams, make_schedule, q_sample, reverse_denoise, sample_loss
from drgo.models.diffusion import default_start_step
from tests.performance.conftest import timing

DENOISING_SLA: float = 300.0
LATENT_DIM = 8
TRAIN_STEPS = 4000
BATCH_ROWS = 256


def mixture_latents(n_rows: int, rng: np.random.Generator) -> np.ndarray:
    """Two tight Gaussian components centred at +1 and -1 on every coordinate"""
    signs = rng.choice([-1.0, 1.0], size=(n_rows, 1))
    return signs + 0.05 * rng.standard_normal((n_rows, LATENT_DIM))


@pytest.mark.perf
def test_reverse_chain_halves_the_corruption_error():
    rng = np.random.default_rng(0)
    schedule = make_schedule(50)
    params = DenoiserParams.initialize(LATENT_DIM, rng)
    optimizer = AdamW(params.parameters(), lr=5e-3)

    with timing() as t:
        # GIVEN a denoiser trained on mixture latents
        for _ in range(TRAIN_STEPS):
            batch = mixture_latents(BATCH_ROWS, rng)
            with Tape() as tape:
                loss = scale(sample_loss(batch, schedule, params, rng), 1.0 / batch.size)
                tape.backward(loss)
            optimizer.step()

        # WHEN 1,000 fresh latents are corrupted to T/2 and run back through the reverse chain
        e0 = mixture_latents(1000, rng)
        t_start = default_start_step(schedule)
        e_t = q_sample(e0, t_start, rng.standard_normal(e0.shape), schedule).value
        recovered = reverse_denoise(e_t, t_start, schedule, params, rng)
        elapsed = t()

    # THEN the reconstruction error is at most half the corruption error
    assert np.mean((recovered - e0) ** 2) <= 0.5 * np.mean((e_t - e0) ** 2)
    assert elapsed < DENOISING_SLA

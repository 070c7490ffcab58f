import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from ..autodiff import Tensor, add, constant, hadamard, matmul, parameter, sigmoid, square, sub, sum_
from .exceptions import ScheduleError, TimestepError

logger = logging.getLogger(__name__)

BETA_FLOOR = 1e-6
STEP_GRID = (20, 50, 100, 200, 500)

Steps = Union[int, np.ndarray]


@dataclass(frozen=True)
class DiffusionSchedule:
    """Noise levels of a T-step forward process

    Arrays are indexed by step - 1, so `alpha_bar[0]` belongs to t = 1.
    """

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.beta)

    def alpha_bar_prev(self, t: int) -> float:
        """alpha_bar at t - 1, with alpha_bar_0 = 1"""
        return 1.0 if t == 1 else float(self.alpha_bar[t - 2])

    def posterior_variance(self, t: int) -> float:
        """beta_tilde_t = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)"""
        return float(self.beta[t - 1] * (1.0 - self.alpha_bar_prev(t)) / (1.0 - self.alpha_bar[t - 1]))

    def check_step(self, t: Steps) -> np.ndarray:
        steps = np.asarray(t, dtype=np.int64)
        if steps.size and (steps.min() < 1 or steps.max() > self.steps):
            raise TimestepError(f"diffusion step must lie in 1..{self.steps}, got {t}")
        return steps


def make_schedule(steps: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> DiffusionSchedule:
    """Linear beta schedule from `beta_start` to `beta_end`, floored at BETA_FLOOR

    Raises
    ------
    ScheduleError
        When steps < 1 or the bounds don't satisfy 0 < beta_start <= beta_end < 1
    """
    if steps < 1:
        raise ScheduleError(f"diffusion needs at least one step, got {steps}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ScheduleError(f"expected 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if steps not in STEP_GRID:
        logger.debug(f"Diffusion steps {steps} outside the usual grid {STEP_GRID}")

    beta = np.maximum(np.linspace(beta_start, beta_end, steps), BETA_FLOOR)
    alpha = 1.0 - beta
    return DiffusionSchedule(beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


def _row_coefficients(values: np.ndarray, shape) -> np.ndarray:
    """Per-row coefficients broadcast to a (N, d) array"""
    column = values.reshape(-1, 1) if values.ndim else values.reshape(1, 1)
    return np.broadcast_to(column, shape).copy()


def q_sample(e0, t: Steps, noise: np.ndarray, schedule: DiffusionSchedule) -> Tensor:
    """sqrt(alpha_bar_t) e0 + sqrt(1 - alpha_bar_t) eps, with one step per row or a shared step

    Raises
    ------
    TimestepError
        When a step lies outside 1..T
    """
    e0 = constant(e0)
    steps = schedule.check_step(t)
    alpha_bar = schedule.alpha_bar[steps - 1]
    signal = _row_coefficients(np.sqrt(alpha_bar), e0.shape)
    spread = _row_coefficients(np.sqrt(1.0 - alpha_bar), e0.shape)
    return add(hadamard(e0, constant(signal)), constant(spread * noise))


def time_embedding(t: Steps, width: int, n_rows: int) -> np.ndarray:
    """Sinusoidal embedding of the step, one row per latent; odd widths get a zero last column"""
    steps = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1), (n_rows,))
    half = width // 2
    frequencies = np.exp(-np.log(10000.0) * np.arange(half) / max(half, 1))
    angles = steps[:, None] * frequencies[None, :]
    embedding = np.zeros((n_rows, width))
    embedding[:, :half] = np.sin(angles)
    embedding[:, half : 2 * half] = np.cos(angles)
    return embedding


@dataclass
class DenoiserParams:
    """Two-layer perceptron predicting the injected noise

    The first layer reads the latent row and its time embedding through separate weights, which is
    the same as one weight over their concatenation. Hidden width is 2d with x * sigmoid(x) activation.
    """

    latent_weight: Tensor
    time_weight: Tensor
    hidden_bias: Tensor
    output_weight: Tensor
    output_bias: Tensor

    @classmethod
    def initialize(cls, latent_dim: int, rng: np.random.Generator) -> "DenoiserParams":
        hidden = 2 * latent_dim
        fan_in = 2 * latent_dim
        return cls(
            latent_weight=parameter(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (latent_dim, hidden)), name="denoiser.w_x"),
            time_weight=parameter(rng.normal(0.0, 1.0 / np.sqrt(fan_in), (latent_dim, hidden)), name="denoiser.w_t"),
            hidden_bias=parameter(np.zeros((1, hidden)), name="denoiser.b1"),
            output_weight=parameter(rng.normal(0.0, 1.0 / np.sqrt(hidden), (hidden, latent_dim)), name="denoiser.w2"),
            output_bias=parameter(np.zeros((1, latent_dim)), name="denoiser.b2"),
        )

    @classmethod
    def zeros(cls, latent_dim: int) -> "DenoiserParams":
        hidden = 2 * latent_dim
        return cls(
            latent_weight=parameter(np.zeros((latent_dim, hidden))),
            time_weight=parameter(np.zeros((latent_dim, hidden))),
            hidden_bias=parameter(np.zeros((1, hidden))),
            output_weight=parameter(np.zeros((hidden, latent_dim))),
            output_bias=parameter(np.zeros((1, latent_dim))),
        )

    @property
    def latent_dim(self) -> int:
        return self.latent_weight.shape[0]

    def parameters(self) -> List[Tensor]:
        return [self.latent_weight, self.time_weight, self.hidden_bias, self.output_weight, self.output_bias]


def denoiser_predict(e_t, t: Steps, params: DenoiserParams) -> Tensor:
    """Predicted noise for latents `e_t` at step(s) `t`, same shape as `e_t`"""
    e_t = constant(e_t)
    n_rows = e_t.shape[0]
    ones = np.ones((n_rows, 1))
    embedding = time_embedding(t, params.latent_dim, n_rows)

    pre_activation = add(
        add(matmul(e_t, params.latent_weight), matmul(embedding, params.time_weight)),
        matmul(ones, params.hidden_bias),
    )
    hidden = hadamard(pre_activation, sigmoid(pre_activation))
    return add(matmul(hidden, params.output_weight), matmul(ones, params.output_bias))


Predictor = Callable[[Tensor, Steps, DenoiserParams], Tensor]


def sample_loss(
    e0,
    schedule: DiffusionSchedule,
    params: DenoiserParams,
    rng: np.random.Generator,
    predictor: Predictor = denoiser_predict,
) -> Tensor:
    """Squared error between injected and predicted noise, summed over all latent entries

    One step per row is drawn uniformly from 1..T, and eps ~ N(0, I). Differentiable w.r.t. the
    denoiser parameters and `e0`.
    """
    e0 = constant(e0)
    steps = rng.integers(1, schedule.steps + 1, size=e0.shape[0])
    noise = rng.standard_normal(e0.shape)
    e_t = q_sample(e0, steps, noise, schedule)
    return sum_(square(sub(noise, predictor(e_t, steps, params))))


def reverse_denoise(
    e_t,
    t_start: int,
    schedule: DiffusionSchedule,
    params: DenoiserParams,
    rng: np.random.Generator,
    predictor: Predictor = denoiser_predict,
) -> np.ndarray:
    """Ancestral reverse chain from step `t_start` down to an estimate of e0

    x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t) + sqrt(beta_tilde_t) z,
    with z = 0 on the last step. Values only, nothing is recorded on a tape.

    Raises
    ------
    TimestepError
        When t_start lies outside 1..T
    """
    schedule.check_step(t_start)
    current = np.array(e_t.value if isinstance(e_t, Tensor) else e_t, dtype=np.float64)
    for step in range(int(t_start), 0, -1):
        predicted = predictor(Tensor(current), step, params).value
        beta = schedule.beta[step - 1]
        mean = (current - beta / np.sqrt(1.0 - schedule.alpha_bar[step - 1]) * predicted) / np.sqrt(
            schedule.alpha[step - 1]
        )
        if step > 1:
            mean = mean + np.sqrt(schedule.posterior_variance(step)) * rng.standard_normal(mean.shape)
        current = mean
    return current


def corrupt_and_denoise(
    e0,
    t_start: int,
    schedule: DiffusionSchedule,
    params: DenoiserParams,
    rng: np.random.Generator,
    predictor: Predictor = denoiser_predict,
) -> np.ndarray:
    """Forward-noise `e0` to step `t_start`, then run the reverse chain back"""
    values = e0.value if isinstance(e0, Tensor) else np.asarray(e0, dtype=np.float64)
    noised = q_sample(values, t_start, rng.standard_normal(values.shape), schedule)
    return reverse_denoise(noised.value, t_start, schedule, params, rng, predictor=predictor)


def default_start_step(schedule: DiffusionSchedule, t_start: Optional[int] = None) -> int:
    """Configured reverse-chain depth, T/2 (at least 1) when unset"""
    return max(1, schedule.steps // 2) if t_start is None else int(t_start)

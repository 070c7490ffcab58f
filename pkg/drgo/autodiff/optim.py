import logging
from typing import Dict, List, Sequence

import numpy as np

from .exceptions import MissingGradientError, NonFiniteError
from .tensor import Tensor

logger = logging.getLogger(__name__)


class AdamW:
    """Adam with decoupled weight decay

    Every step first shrinks parameters by (1 - lr * weight_decay), then applies the bias-corrected
    Adam update. Gradients are cleared after the step.

    Parameters
    ----------
    params : Sequence[Tensor]
        parameters updated in place; each must hold a gradient at step time
    lr : float
        learning rate
    weight_decay : float
        decoupled decay coefficient
    betas : tuple
        first and second moment decay rates
    eps : float
        denominator floor
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        weight_decay: float = 0.0,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params: List[Tensor] = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.first_moment: List[np.ndarray] = [np.zeros_like(param.value) for param in self.params]
        self.second_moment: List[np.ndarray] = [np.zeros_like(param.value) for param in self.params]

    def zero_grad(self) -> None:
        for param in self.params:
            param.grad = None

    def step(self) -> None:
        """Apply one update to every parameter

        Raises
        ------
        MissingGradientError
            When a parameter has no gradient; nothing is updated in that case
        NonFiniteError
            When a gradient holds inf or NaN
        """
        for index, param in enumerate(self.params):
            if param.grad is None:
                raise MissingGradientError(f"parameter {param.name or index} has no gradient")
            if not np.all(np.isfinite(param.grad)):
                raise NonFiniteError(f"parameter {param.name or index} has a non-finite gradient")

        self.step_count += 1
        correction1 = 1.0 - self.beta1**self.step_count
        correction2 = 1.0 - self.beta2**self.step_count
        for param, m, v in zip(self.params, self.first_moment, self.second_moment):
            grad = param.grad
            param.value *= 1.0 - self.lr * self.weight_decay
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param.value -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        state: Dict[str, np.ndarray] = {"step_count": np.array([float(self.step_count)])}
        for index, (m, v) in enumerate(zip(self.first_moment, self.second_moment)):
            state[f"m.{index}"] = m
            state[f"v.{index}"] = v
        return state


def adamw_step(params: Sequence[Tensor], state: AdamW) -> None:
    """One AdamW update of `params`, which must be the parameters `state` was created for"""
    if [id(param) for param in params] != [id(param) for param in state.params]:
        raise ValueError("optimizer state was created for different parameters")
    state.step()

from typing import Callable, List, Sequence, Union

import numpy as np

from .exceptions import NonFiniteError
from .tensor import Tape, Tensor, parameter

ArrayLike = Union[np.ndarray, Sequence[float], float]


def grad_check(
    function: Callable[..., Tensor],
    point: Union[ArrayLike, Sequence[ArrayLike]],
    eps: float = 1e-5,
) -> float:
    """Largest gap between the tape gradient and central finite differences

    Parameters
    ----------
    function : Callable[..., Tensor]
        takes one Tensor per array of `point` and returns a scalar Tensor
    point : array or list of arrays
        where the gradient is checked; a list means several arguments
    eps : float
        finite difference step

    Returns
    -------
    float
        max over coordinates of |analytic - numeric| / max(1, |analytic|)

    Raises
    ------
    NonFiniteError
        When the function or a gradient isn't finite at or around the point
    """
    arrays = _as_arrays(point)

    params = [parameter(array) for array in arrays]
    with Tape() as tape:
        loss = function(*params)
    _check_finite(loss.item(), "function value")
    tape.backward(loss)
    analytic = [param.grad if param.grad is not None else np.zeros_like(param.value) for param in params]

    worst = 0.0
    for position, array in enumerate(arrays):
        flat = array.reshape(-1)
        for coordinate in range(flat.size):
            original = flat[coordinate]
            flat[coordinate] = original + eps
            upper = _evaluate(function, arrays)
            flat[coordinate] = original - eps
            lower = _evaluate(function, arrays)
            flat[coordinate] = original
            numeric = (upper - lower) / (2.0 * eps)
            exact = analytic[position].reshape(-1)[coordinate]
            _check_finite(numeric, "finite difference")
            _check_finite(exact, "gradient")
            worst = max(worst, abs(exact - numeric) / max(1.0, abs(exact)))
    return worst


def _as_arrays(point) -> List[np.ndarray]:
    if isinstance(point, (list, tuple)) and point and not np.isscalar(point[0]):
        return [np.array(array, dtype=np.float64) for array in point]
    return [np.array(point, dtype=np.float64)]


def _evaluate(function: Callable[..., Tensor], arrays: List[np.ndarray]) -> float:
    value = function(*[Tensor(array) for array in arrays]).item()
    _check_finite(value, "function value")
    return value


def _check_finite(value: float, what: str) -> None:
    if not np.isfinite(value):
        raise NonFiniteError(f"{what} is not finite during gradient check")

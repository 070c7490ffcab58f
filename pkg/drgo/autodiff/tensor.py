import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .exceptions import DomainError, NonFiniteError, ShapeMismatchError, TapeError

logger = logging.getLogger(__name__)

Operand = Union["Tensor", np.ndarray, float, int]
GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_ACTIVE_TAPES: List["Tape"] = []


class Tensor:
    """Dense float64 array that can take part in reverse-mode differentiation

    Operations on tensors are recorded on the innermost active `Tape` whenever one of their inputs
    requires a gradient. Outside a tape, operations only compute values.

    Example
    -------
        >>> x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        >>> with Tape() as tape:
        ...     loss = sum_(square(x))
        >>> backward(tape, loss)
        >>> x.grad
        array([2., 4., 6.])
    """

    # numpy defers binary operators to Tensor, e.g. ndarray @ Tensor
    __array_ufunc__ = None

    def __init__(self, value, requires_grad: bool = False, name: Optional[str] = None):
        self.value: np.ndarray = np.array(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._tape: Optional["Tape"] = None

    @classmethod
    def _wrap(cls, value: np.ndarray, requires_grad: bool = False) -> "Tensor":
        tensor = cls.__new__(cls)
        tensor.value = value
        tensor.requires_grad = requires_grad
        tensor.grad = None
        tensor.name = None
        tensor._tape = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        return float(self.value.reshape(-1)[0]) if self.value.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.value.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        if isinstance(other, (int, float)):
            return scale(self, other)
        return hadamard(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return self.__mul__(other)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __truediv__(self, other: float) -> "Tensor":
        if not isinstance(other, (int, float)):
            raise TypeError("tensors can only be divided by a Python number")
        return scale(self, 1.0 / other)

    def __matmul__(self, other: Operand) -> "Tensor":
        return matmul(self, other)

    def __rmatmul__(self, other) -> "Tensor":
        return matmul(other, self)


@dataclass
class _Entry:
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    grad_fn: GradFn


class Tape:
    """Ordered record of primitive operations, consumed by a single backward pass

    Use as a context manager; tapes nest and operations are recorded on the innermost one.
    """

    def __init__(self):
        self._entries: List[_Entry] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc_info):
        _ACTIVE_TAPES.remove(self)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def record(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], grad_fn: GradFn) -> None:
        if self._consumed:
            raise TapeError(f"cannot record {op} on a tape already consumed by backward")
        output._tape = self
        self._entries.append(_Entry(op=op, output=output, inputs=inputs, grad_fn=grad_fn))

    def backward(self, loss: Tensor) -> None:
        """Populate `.grad` of every leaf reachable from `loss` that requires a gradient

        Leaf gradients accumulate across backward passes until cleared; intermediates are released.

        Raises
        ------
        TapeError
            When the tape was already consumed, the loss isn't scalar or wasn't recorded on this tape
        NonFiniteError
            When a leaf gradient contains inf or NaN
        """
        if self._consumed:
            raise TapeError("tape already consumed by a backward pass, run the forward pass again")
        if loss.size != 1:
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not self:
            raise TapeError("loss was not recorded on this tape")

        pending = {id(loss): np.ones_like(loss.value)}
        for entry in reversed(self._entries):
            upstream = pending.pop(id(entry.output), None)
            if upstream is None:
                continue
            for parent, grad in zip(entry.inputs, entry.grad_fn(upstream)):
                if grad is None or not parent.requires_grad:
                    continue
                if parent._tape is self:
                    key = id(parent)
                    pending[key] = grad if key not in pending else pending[key] + grad
                    continue
                if not np.all(np.isfinite(grad)):
                    raise NonFiniteError(f"non-finite gradient reaching {parent!r} through {entry.op}")
                parent.grad = grad.copy() if parent.grad is None else parent.grad + grad

        self._entries.clear()
        self._consumed = True


def backward(tape: Tape, loss: Tensor) -> None:
    tape.backward(loss)


def parameter(value, name: Optional[str] = None) -> Tensor:
    return Tensor(value, requires_grad=True, name=name)


def constant(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(op: str, value: np.ndarray, inputs: Tuple[Tensor, ...], grad_fn: GradFn) -> Tensor:
    tape = _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None
    track = tape is not None and any(tensor.requires_grad for tensor in inputs)
    output = Tensor._wrap(value, requires_grad=track)
    if track:
        tape.record(op, output, inputs, grad_fn)  # type: ignore[union-attr]
    return output


def _is_scalar(tensor: Tensor) -> bool:
    return tensor.ndim == 0


def _reduce_to(grad: np.ndarray, tensor: Tensor) -> np.ndarray:
    """Gradient of a broadcast scalar operand"""
    return np.asarray(grad.sum()) if _is_scalar(tensor) and grad.ndim else grad


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise ShapeMismatchError(op, a.shape, b.shape)


def matmul(a, b: Operand) -> Tensor:
    """Matrix product of 2-D operands; `a` may be a constant scipy sparse matrix"""
    b = constant(b)
    if sp.issparse(a):
        if b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatchError("matmul", a.shape, b.shape)
        transposed = a.T.tocsr()
        return _result("matmul", np.asarray(a @ b.value), (b,), lambda g: (transposed @ g,))

    a = constant(a)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    return _result("matmul", a.value @ b.value, (a, b), lambda g: (g @ b.value.T, a.value.T @ g))


def add(a: Operand, b: Operand) -> Tensor:
    a, b = constant(a), constant(b)
    _check_same_shape("add", a, b)
    return _result("add", a.value + b.value, (a, b), lambda g: (_reduce_to(g, a), _reduce_to(g, b)))


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = constant(a), constant(b)
    _check_same_shape("sub", a, b)
    return _result("sub", a.value - b.value, (a, b), lambda g: (_reduce_to(g, a), -_reduce_to(g, b)))


def hadamard(a: Operand, b: Operand) -> Tensor:
    a, b = constant(a), constant(b)
    if a.shape != b.shape:
        raise ShapeMismatchError("hadamard", a.shape, b.shape)
    return _result("hadamard", a.value * b.value, (a, b), lambda g: (g * b.value, g * a.value))


def scale(a: Operand, factor: float) -> Tensor:
    a = constant(a)
    factor = float(factor)
    return _result("scale", a.value * factor, (a,), lambda g: (g * factor,))


def sum_(a: Operand, axis: Optional[int] = None) -> Tensor:
    """Sum over all entries, or over one axis"""
    a = constant(a)
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise ShapeMismatchError(f"sum(axis={axis})", a.shape)

    def grad_fn(g):
        expanded = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(expanded, a.shape).copy(),)

    return _result("sum", np.asarray(a.value.sum(axis=axis)), (a,), grad_fn)


def mean(a: Operand, axis: Optional[int] = None) -> Tensor:
    a = constant(a)
    count = a.size if axis is None else a.shape[axis]
    if not count:
        raise DomainError("mean of an empty tensor")
    return scale(sum_(a, axis=axis), 1.0 / count)


def sigmoid(a: Operand) -> Tensor:
    a = constant(a)
    value = expit(a.value)
    return _result("sigmoid", value, (a,), lambda g: (g * value * (1.0 - value),))


def log(a: Operand) -> Tensor:
    a = constant(a)
    if np.any(a.value <= 0) or np.any(np.isnan(a.value)):
        raise DomainError(f"log of non-positive value (min {np.nanmin(a.value) if a.size else 'n/a'})")
    return _result("log", np.log(a.value), (a,), lambda g: (g / a.value,))


def exp(a: Operand) -> Tensor:
    a = constant(a)
    with np.errstate(over="ignore"):
        value = np.exp(a.value)
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"exp overflow (max input {a.value.max()})")
    return _result("exp", value, (a,), lambda g: (g * value,))


def softplus(a: Operand) -> Tensor:
    """log(1 + exp(a)), stable for large |a|"""
    a = constant(a)
    return _result("softplus", np.logaddexp(0.0, a.value), (a,), lambda g: (g * expit(a.value),))


def square(a: Operand) -> Tensor:
    a = constant(a)
    return _result("square", a.value * a.value, (a,), lambda g: (2.0 * a.value * g,))


def concat_rows(tensors: Sequence[Operand]) -> Tensor:
    tensors = tuple(constant(tensor) for tensor in tensors)
    if not tensors:
        raise ShapeMismatchError("concat_rows")
    widths = {tensor.shape[1:] for tensor in tensors}
    if len(widths) != 1 or tensors[0].ndim != 2:
        raise ShapeMismatchError("concat_rows", *(tensor.shape for tensor in tensors))
    bounds = np.cumsum([tensor.shape[0] for tensor in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, bounds, axis=0))

    return _result("concat_rows", np.concatenate([tensor.value for tensor in tensors], axis=0), tensors, grad_fn)


def gather_rows(a: Operand, index) -> Tensor:
    """Rows (or entries of a vector) at `index`, repeats allowed"""
    a = constant(a)
    index = np.asarray(index, dtype=np.int64).reshape(-1)
    if a.ndim == 0:
        raise ShapeMismatchError("gather_rows", a.shape)
    if index.size and (index.min() < -a.shape[0] or index.max() >= a.shape[0]):
        raise DomainError(f"gather_rows index out of range for {a.shape[0]} rows")

    def grad_fn(g):
        accumulated = np.zeros_like(a.value)
        np.add.at(accumulated, index, g)
        return (accumulated,)

    return _result("gather_rows", a.value[index], (a,), grad_fn)

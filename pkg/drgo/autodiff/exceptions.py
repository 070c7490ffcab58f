from typing import Tuple

from ..exceptions import DataError, DrgoError


class AutodiffError(DrgoError):
    """Base error for tensors, tapes and optimizers"""


class ShapeMismatchError(AutodiffError):
    """Operand shapes are incompatible for a primitive"""

    def __init__(self, op: str, *shapes: Tuple[int, ...]):
        super().__init__(f"{op}: incompatible shapes {', '.join(str(shape) for shape in shapes)}")
        self.op = op
        self.shapes = shapes


class DomainError(AutodiffError):
    """Input outside the domain of a primitive, e.g. log of a non-positive value"""


class NonFiniteError(AutodiffError):
    """A value or gradient became inf or NaN"""


class TapeError(AutodiffError):
    """Backward requested on a consumed tape, a detached loss or a non-scalar loss"""


class MissingGradientError(AutodiffError):
    """Optimizer step on a parameter without gradient"""


class CheckpointError(AutodiffError, DataError):
    """Checkpoint file can't be read"""

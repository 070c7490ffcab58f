"""Dense float64 reverse-mode differentiation, AdamW and checkpoints
"""
from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .exceptions import (
    AutodiffError,
    CheckpointError,
    DomainError,
    MissingGradientError,
    NonFiniteError,
    ShapeMismatchError,
    TapeError,
)
from .gradcheck import grad_check
from .optim import AdamW, adamw_step
from .tensor import (
    Tape,
    Tensor,
    add,
    backward,
    concat_rows,
    constant,
    exp,
    gather_rows,
    hadamard,
    log,
    matmul,
    mean,
    parameter,
    scale,
    sigmoid,
    softplus,
    square,
    sub,
    sum_,
)

__all__ = [
    "AdamW",
    "AutodiffError",
    "CheckpointError",
    "DomainError",
    "MissingGradientError",
    "NonFiniteError",
    "ShapeMismatchError",
    "Tape",
    "TapeError",
    "Tensor",
    "adamw_step",
    "add",
    "backward",
    "concat_rows",
    "constant",
    "exp",
    "gather_rows",
    "grad_check",
    "hadamard",
    "load_checkpoint",
    "log",
    "matmul",
    "mean",
    "parameter",
    "read_checkpoint",
    "save_checkpoint",
    "scale",
    "sigmoid",
    "softplus",
    "square",
    "sub",
    "sum_",
]

from . import nn, ops
from .checkpoint import CheckpointError, file_sha256, load_arrays, save_arrays
from .gradcheck import GradCheckReport, finite_difference_check
from .optim import SGD, Adam, Optimizer
from .tensor import GradcoreError, ShapeError, Tape, Tensor, active_tape

__all__ = [
    "Adam", "CheckpointError", "GradCheckReport", "GradcoreError", "Optimizer",
    "SGD", "ShapeError", "Tape", "Tensor", "active_tape",
    "file_sha256", "finite_difference_check", "load_arrays", "nn", "ops",
    "save_arrays",
]

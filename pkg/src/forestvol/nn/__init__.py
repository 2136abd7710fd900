from .tensor import (
    ShapeError,
    Tensor,
    add,
    batch_norm,
    concat,
    gather,
    matmul,
    max_reduce,
    mean_all,
    mul,
    relu,
    reshape,
    sub,
)
from .layers import BatchNorm, Dense, Head, Module, SharedMLP
from .optim import AdamW, CosineWarmRestarts, NonFiniteGradientError
from .checkpoint import (
    CHECKPOINT_FORMAT,
    CheckpointError,
    apply_parameters,
    load_checkpoint,
    restore_arrays,
    save_checkpoint,
)

__all__ = [
    "AdamW",
    "BatchNorm",
    "CHECKPOINT_FORMAT",
    "CheckpointError",
    "CosineWarmRestarts",
    "Dense",
    "Head",
    "Module",
    "NonFiniteGradientError",
    "ShapeError",
    "SharedMLP",
    "Tensor",
    "add",
    "apply_parameters",
    "batch_norm",
    "concat",
    "gather",
    "load_checkpoint",
    "matmul",
    "max_reduce",
    "mean_all",
    "mul",
    "relu",
    "reshape",
    "restore_arrays",
    "save_checkpoint",
    "sub",
]

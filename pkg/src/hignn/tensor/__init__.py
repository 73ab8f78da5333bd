"""Minimal float64 tensors with reverse-mode differentiation."""

from .core import (
    DoubleBackward, NonScalarLoss, NoTape, ShapeMismatch, Tape, Tensor, TensorError,
    active_tape, as_tensor,
)
from .kernels import BACKEND
from .ops import (
    add, bce_with_logits, bilinear_slices, concat, dropout, gather, hadamard, leaky_relu,
    matmul, maximum, mse, mul, reduce_max, reduce_sum, relu, reshape, scale_slices,
    segment_max, segment_softmax, segment_sum, sigmoid, slice_cols, softmax, sub, tanh,
    transpose,
)
from .gradcheck import block_rel_error, max_rel_error, numeric_grad

__all__ = [
    "BACKEND", "block_rel_error", "DoubleBackward", "NoTape", "NonScalarLoss", "ShapeMismatch", "Tape", "Tensor",
    "TensorError", "active_tape", "add", "as_tensor", "bce_with_logits", "bilinear_slices",
    "concat", "dropout", "gather", "hadamard", "leaky_relu", "matmul", "max_rel_error",
    "maximum", "mse", "mul", "numeric_grad", "reduce_max", "reduce_sum", "relu", "reshape",
    "scale_slices", "segment_max", "segment_softmax", "segment_sum", "sigmoid", "slice_cols",
    "softmax", "sub", "tanh", "transpose",
]

"""Minimal dense-tensor library with reverse-mode automatic differentiation."""

from .checkpoint import load_tensors, save_tensors
from .gradcheck import check_gradients, finite_difference_grad
from .tensor import (
    GradTape,
    Tensor,
    add,
    concat,
    conv2d,
    custom_op,
    div,
    dropout,
    index,
    layer_norm,
    log_softmax,
    masked_fill,
    matmul,
    max_pool2d,
    mul,
    neg,
    no_grad,
    pad,
    power,
    relu,
    reshape,
    set_debug_checks,
    sigmoid,
    silu,
    softmax,
    sub,
    take,
    take_along,
    tanh,
    texp,
    tlog,
    tmax,
    tmean,
    transpose,
    tsum,
)

__all__ = [name for name in dir() if not name.startswith("_")]

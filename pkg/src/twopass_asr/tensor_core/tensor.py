"""Dense tensors with reverse-mode automatic differentiation on numpy arrays.

The op set is deliberately small: just enough to express LSTM, convolutional,
Transformer and Conformer style networks plus their training losses. Single
precision is the working dtype for training and benchmarks; gradient-check
tests run the same graphs in double precision.

Recording model: while a :class:`GradTape` is active, every op whose inputs
(transitively) require gradients appends one entry to the innermost tape, in
execution order. Because producers always execute before consumers, the entry
list is a topological order and ``backward`` walks it strictly in reverse.

Gradient semantics: ``backward`` *adds* into ``Tensor.grad``; callers zero
grads explicitly between optimizer steps. Calling ``backward`` twice on the
same tape without re-running the forward accumulates the gradients twice.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..errors import ContractError, DimensionError, ParameterError

__all__ = [
    "Tensor",
    "GradTape",
    "no_grad",
    "set_debug_checks",
    "concat",
    "conv2d",
    "custom_op",
    "dropout",
    "layer_norm",
    "log_softmax",
    "masked_fill",
    "matmul",
    "max_pool2d",
    "pad",
    "relu",
    "sigmoid",
    "silu",
    "softmax",
    "take",
    "take_along",
    "tanh",
]

_FLOAT_DTYPES = (np.float32, np.float64)

# Finite-value assertions after every forward op. Expensive; enabled by the
# test suite, off for training and benchmarks.
_DEBUG_CHECKS = False


def set_debug_checks(enabled: bool) -> None:
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


class Tensor:
    """A dense array plus the bookkeeping needed for reverse-mode autodiff.

    Attributes:
        data: the underlying numpy array (float32 or float64).
        requires_grad: whether gradients should flow to this tensor.
        grad: accumulated gradient, same shape as ``data``. Reads as an exact
            zero array until a backward pass has reached this tensor.
    """

    __slots__ = ("data", "requires_grad", "_grad", "_tape")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._grad: Optional[np.ndarray] = None
        self._tape: Optional["GradTape"] = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def grad(self) -> Optional[np.ndarray]:
        if self._grad is None:
            return np.zeros_like(self.data) if self.requires_grad else None
        return self._grad

    @grad.setter
    def grad(self, value) -> None:
        self._grad = None if value is None else np.asarray(value, dtype=self.dtype)

    def zero_grad(self) -> None:
        self._grad = None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def astype(self, dtype) -> "Tensor":
        if self.data.dtype == np.dtype(dtype):
            return self
        return Tensor(self.data.astype(dtype), requires_grad=False)

    def backward(self) -> None:
        """Run reverse-mode AD from this (scalar) tensor over its tape."""
        if self._tape is None:
            raise ContractError("backward() on a tensor that is not on any tape")
        self._tape.backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)

    # -- reductions / views as methods ----------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None, keepdims: bool = False):
        return tmax(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


TensorLike = Union[Tensor, np.ndarray, float, int]


# ---------------------------------------------------------------------------
# Tape machinery
# ---------------------------------------------------------------------------


class _TapeEntry:
    __slots__ = ("op", "inputs", "out", "bwd")

    def __init__(self, op: str, inputs, out: Tensor, bwd: Callable):
        self.op = op
        self.inputs = inputs
        self.out = out
        self.bwd = bwd


class GradTape:
    """Ordered record of executed ops.

    Entries are appended in execution order, so every op's inputs precede it;
    ``backward`` visits entries in exact reverse order.
    """

    def __init__(self):
        self.entries: list[_TapeEntry] = []

    def __enter__(self) -> "GradTape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def backward(self, loss: Tensor) -> None:
        """Populate ``grad`` for every tensor reachable from ``loss``.

        Gradients are *added* into ``Tensor.grad``. Tensors not reachable
        from the loss are left untouched (their ``grad`` reads as zero).
        """
        if loss.data.size != 1:
            raise ContractError(f"backward() requires a scalar loss, got shape {loss.shape}")
        flow: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        holders: dict[int, Tensor] = {id(loss): loss}
        for entry in reversed(self.entries):
            oid = id(entry.out)
            if oid not in flow:
                continue
            grad_out = flow.pop(oid)
            holders.pop(oid)
            _accumulate(entry.out, grad_out)
            grads_in = entry.bwd(grad_out)
            for parent, grad in zip(entry.inputs, grads_in):
                if grad is None or not isinstance(parent, Tensor) or not parent.requires_grad:
                    continue
                pid = id(parent)
                if pid in flow:
                    flow[pid] = flow[pid] + grad
                else:
                    flow[pid] = grad
                    holders[pid] = parent
        for tid, grad in flow.items():
            _accumulate(holders[tid], grad)


def _accumulate(t: Tensor, grad: np.ndarray) -> None:
    if t._grad is None:
        t._grad = grad.copy() if grad.base is not None else grad
    else:
        t._grad = t._grad + grad


_TAPE_STACK: list[Optional[GradTape]] = []


def _active_tape() -> Optional[GradTape]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class no_grad:
    """Context manager that suspends tape recording (inference mode)."""

    def __enter__(self):
        _TAPE_STACK.append(None)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()


def _record(op: str, inputs, out_data: np.ndarray, bwd: Callable) -> Tensor:
    if _DEBUG_CHECKS and not np.all(np.isfinite(out_data)):
        raise FloatingPointError(f"non-finite values produced by op '{op}'")
    tape = _active_tape()
    needs = tape is not None and any(
        isinstance(t, Tensor) and t.requires_grad for t in inputs
    )
    out = Tensor(out_data, requires_grad=needs)
    if needs:
        out._tape = tape
        tape.entries.append(_TapeEntry(op, inputs, out, bwd))
    return out


def custom_op(op: str, inputs: Sequence, out_data: np.ndarray, bwd: Callable) -> Tensor:
    """Register an externally implemented differentiable op on the tape.

    ``bwd(grad_out)`` must return one gradient (or None) per input, aligned
    with ``inputs``. Used by ops whose forward/backward are cheaper to state
    directly than to compose from primitives (e.g. lattice losses).
    """
    return _record(op, tuple(inputs), out_data, bwd)


def _promote(value: TensorLike, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype), requires_grad=False)


def _as_pair(a: TensorLike, b: TensorLike):
    if isinstance(a, Tensor):
        return a, _promote(b, a)
    if isinstance(b, Tensor):
        return _promote(a, b), b
    raise ContractError("binary op needs at least one Tensor operand")


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcasted gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Arithmetic primitives
# ---------------------------------------------------------------------------


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _as_pair(a, b)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record("add", (a, b), a.data + b.data, bwd)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _as_pair(a, b)

    def bwd(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record("sub", (a, b), a.data - b.data, bwd)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _as_pair(a, b)

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _record("mul", (a, b), a.data * b.data, bwd)


def div(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = _as_pair(a, b)

    def bwd(g):
        ga = _unbroadcast(g / b.data, a.shape)
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
        return ga, gb

    return _record("div", (a, b), a.data / b.data, bwd)


def neg(a: Tensor) -> Tensor:
    return _record("neg", (a,), -a.data, lambda g: (-g,))


def power(a: Tensor, exponent: float) -> Tensor:
    p = float(exponent)

    def bwd(g):
        return (g * p * np.power(a.data, p - 1.0),)

    return _record("pow", (a,), np.power(a.data, p), bwd)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    """Matrix product. Leading (batch) dims broadcast as in numpy matmul."""
    a, b = _as_pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")

    def bwd(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _record("matmul", (a, b), np.matmul(a.data, b.data), bwd)


# ---------------------------------------------------------------------------
# Elementwise nonlinearities
# ---------------------------------------------------------------------------


def texp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _record("exp", (a,), out, lambda g: (g * out,))


def tlog(a: Tensor) -> Tensor:
    return _record("log", (a,), np.log(a.data), lambda g: (g / a.data,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _record("tanh", (a,), out, lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    # Stable on both tails.
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _record("sigmoid", (a,), out, lambda g: (g * out * (1.0 - out),))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _record("relu", (a,), np.where(mask, a.data, 0.0), lambda g: (g * mask,))


def silu(a: Tensor) -> Tensor:
    """x * sigmoid(x) (the swish activation used in Conformer blocks)."""
    s = 1.0 / (1.0 + np.exp(-np.clip(a.data, -60.0, 60.0)))
    out = a.data * s

    def bwd(g):
        return (g * (s + a.data * s * (1.0 - s)),)

    return _record("silu", (a,), out, bwd)


# ---------------------------------------------------------------------------
# Shape ops
# ---------------------------------------------------------------------------


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    return _record("reshape", (a,), a.data.reshape(shape), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _record("transpose", (a,), a.data.transpose(axes), lambda g: (g.transpose(inverse),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        pieces = []
        for i in range(len(tensors)):
            key = [slice(None)] * g.ndim
            key[axis] = slice(offsets[i], offsets[i + 1])
            pieces.append(g[tuple(key)])
        return tuple(pieces)

    return _record("concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), bwd)


def index(a: Tensor, key) -> Tensor:
    """Basic indexing (ints and slices only, no repeats possible)."""

    def bwd(g):
        full = np.zeros_like(a.data)
        full[key] = g
        return (full,)

    return _record("index", (a,), a.data[key].copy(), bwd)


def take(a: Tensor, indices: np.ndarray, axis: int = 0) -> Tensor:
    """Gather along ``axis`` with an integer index array (embedding lookup)."""
    indices = np.asarray(indices)

    def bwd(g):
        full = np.zeros_like(a.data)
        if axis == 0:
            np.add.at(full, indices, g)
        else:
            moved = np.moveaxis(full, axis, 0)
            np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return (full, None)

    return _record("take", (a, indices), np.take(a.data, indices, axis=axis), bwd)


def take_along(a: Tensor, indices: np.ndarray, axis: int) -> Tensor:
    """Differentiable ``np.take_along_axis`` (per-row gathers, argmax picks)."""
    indices = np.asarray(indices)

    def bwd(g):
        full = np.zeros_like(a.data)
        # scatter-add: indices may repeat along the gather axis
        grid = list(np.ogrid[tuple(slice(n) for n in indices.shape)])
        grid[axis] = indices
        np.add.at(full, tuple(grid), g)
        return (full, None)

    return _record("take_along", (a, indices), np.take_along_axis(a.data, indices, axis=axis), bwd)


def masked_fill(a: Tensor, mask: np.ndarray, value: float) -> Tensor:
    mask = np.asarray(mask, dtype=bool)
    out = np.where(mask, np.asarray(value, dtype=a.dtype), a.data)

    def bwd(g):
        return (np.where(mask, np.zeros((), dtype=g.dtype), g), None)

    return _record("masked_fill", (a, mask), out, bwd)


def pad(a: Tensor, pad_width) -> Tensor:
    """Zero padding; ``pad_width`` follows ``np.pad`` conventions."""
    pad_width = tuple((int(lo), int(hi)) for lo, hi in pad_width)

    def bwd(g):
        key = tuple(slice(lo, g.shape[i] - hi if hi else None) for i, (lo, hi) in enumerate(pad_width))
        return (g[key],)

    return _record("pad", (a,), np.pad(a.data, pad_width), bwd)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


def _expand_reduced(g: np.ndarray, shape, axis, keepdims: bool) -> np.ndarray:
    if not keepdims and axis is not None:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def bwd(g):
        return (_expand_reduced(g, a.shape, axis, keepdims).copy(),)

    return _record("sum", (a,), a.data.sum(axis=axis, keepdims=keepdims), bwd)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = float(a.data.size) if axis is None else float(np.prod(
        [a.shape[ax] for ax in ((axis,) if isinstance(axis, int) else axis)]
    ))

    def bwd(g):
        return (_expand_reduced(g, a.shape, axis, keepdims) / count,)

    return _record("mean", (a,), a.data.mean(axis=axis, keepdims=keepdims), bwd)


def tmax(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.max(axis=axis, keepdims=keepdims)

    def bwd(g):
        mask = a.data == _expand_reduced(out, a.shape, axis, keepdims)
        # split gradient equally among ties to keep backward deterministic
        counts = mask.sum(axis=axis, keepdims=True) if axis is not None else mask.sum()
        share = mask / counts.astype(g.dtype)
        return (_expand_reduced(g, a.shape, axis, keepdims) * share,)

    return _record("max", (a,), out, bwd)


# ---------------------------------------------------------------------------
# Normalizations and regularization
# ---------------------------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax with max-subtraction; slices along ``axis`` sum to one."""
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return _record("softmax", (a,), out, bwd)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def bwd(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _record("log_softmax", (a,), out, bwd)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    if x.shape[-1] < 1:
        raise DimensionError("layer_norm needs a non-empty last axis")
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    out = xhat * gamma.data + beta.data

    def bwd(g):
        gg = g * gamma.data
        m1 = gg.mean(axis=-1, keepdims=True)
        m2 = (gg * xhat).mean(axis=-1, keepdims=True)
        gx = (gg - m1 - xhat * m2) * inv_std
        reduce_axes = tuple(range(g.ndim - 1))
        ggamma = (g * xhat).sum(axis=reduce_axes)
        gbeta = g.sum(axis=reduce_axes)
        return gx, ggamma, gbeta

    return _record("layer_norm", (x, gamma, beta), out, bwd)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool = True) -> Tensor:
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / np.asarray(1.0 - rate, dtype=x.dtype)
    keep = keep.astype(x.dtype)
    return _record("dropout", (x,), x.data * keep, lambda g: (g * keep,))


# ---------------------------------------------------------------------------
# Convolution / pooling
# ---------------------------------------------------------------------------


def _im2col_indices(ci, hp, wp, kh, kw, stride):
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    i0 = np.repeat(np.arange(kh), kw)
    j0 = np.tile(np.arange(kw), kh)
    i1 = stride * np.repeat(np.arange(ho), wo)
    j1 = stride * np.tile(np.arange(wo), ho)
    rows = i0[:, None] + i1[None, :]  # (kh*kw, ho*wo)
    cols = j0[:, None] + j1[None, :]
    return rows, cols, ho, wo


def conv2d(x: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation (no kernel flipping).

    ``x`` is (C_in, H, W) or (B, C_in, H, W); ``kernels`` is
    (C_out, C_in, kH, kW). Output spatial dims follow
    floor((dim + 2*padding - k) / stride) + 1.
    """
    squeeze = x.ndim == 3
    xb = x if not squeeze else reshape(x, (1,) + x.shape)
    b, ci, h, w = xb.shape
    co, ci_k, kh, kw = kernels.shape
    if ci_k != ci:
        raise DimensionError(f"conv2d channels differ: input {ci}, kernels {ci_k}")
    hp, wp = h + 2 * padding, w + 2 * padding
    if kh > hp or kw > wp:
        raise DimensionError(
            f"conv2d kernel ({kh}x{kw}) larger than padded input ({hp}x{wp})"
        )
    xp = np.pad(xb.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    rows, cols, ho, wo = _im2col_indices(ci, hp, wp, kh, kw, stride)
    patches = xp[:, :, rows, cols]  # (B, Ci, kh*kw, ho*wo)
    cols_mat = patches.reshape(b, ci * kh * kw, ho * wo)
    kmat = kernels.data.reshape(co, ci * kh * kw)
    out = np.matmul(kmat, cols_mat).reshape(b, co, ho, wo)

    def bwd(g):
        gflat = g.reshape(b, co, ho * wo)
        gk = np.einsum("bcl,bdl->cd", gflat, cols_mat).reshape(kernels.shape)
        gcols = np.matmul(kmat.T, gflat).reshape(b, ci, kh * kw, ho * wo)
        gxp = np.zeros_like(xp)
        bidx = np.arange(b)[:, None, None, None]
        cidx = np.arange(ci)[None, :, None, None]
        np.add.at(gxp, (bidx, cidx, rows[None, None], cols[None, None]), gcols)
        gx = gxp[:, :, padding:hp - padding or None, padding:wp - padding or None]
        return gx.reshape(xb.shape) if not squeeze else gx.reshape(x.shape), gk

    result = _record("conv2d", (x, kernels), out, bwd)
    return reshape(result, (co, ho, wo)) if squeeze else result


def max_pool2d(x: Tensor, size: int = 2) -> Tensor:
    """Square max pooling with stride == size; ragged edges are -inf padded."""
    squeeze = x.ndim == 3
    xb = x if not squeeze else reshape(x, (1,) + x.shape)
    b, c, h, w = xb.shape
    ho, wo = -(-h // size), -(-w // size)
    ph, pw = ho * size - h, wo * size - w
    xp = np.pad(xb.data, ((0, 0), (0, 0), (0, ph), (0, pw)), constant_values=-np.inf)
    windows = xp.reshape(b, c, ho, size, wo, size).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(b, c, ho, wo, size * size)
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]

    def bwd(g):
        gwin = np.zeros((b, c, ho, wo, size * size), dtype=g.dtype)
        np.put_along_axis(gwin, arg[..., None], g[..., None], axis=-1)
        gp = gwin.reshape(b, c, ho, wo, size, size).transpose(0, 1, 2, 4, 3, 5)
        gp = gp.reshape(b, c, ho * size, wo * size)[:, :, :h, :w]
        return (gp.reshape(x.shape) if squeeze else gp,)

    result = _record("max_pool2d", (x,), out, bwd)
    return reshape(result, (c, ho, wo)) if squeeze else result

"""Neural-network building blocks on top of tensor_core.

Everything is seeded explicitly: layers that need randomness (init, dropout)
receive a ``numpy.random.Generator`` and never touch global RNG state.
"""

from __future__ import annotations

import math
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from . import tensor_core as tc
from .errors import ConfigurationError
from .tensor_core import Tensor


class Module:
    """Base class tracking parameters and submodules by attribute name."""

    def __init__(self):
        self.training = True

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in self.__dict__.items():
            if name.startswith("_") or name == "training":
                continue
            full = f"{prefix}{name}"
            if isinstance(value, Tensor):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")
                    elif isinstance(item, Tensor):
                        yield f"{full}.{i}", item

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> list[Tensor]:
        return [p for p in self.parameters() if p.requires_grad]

    def num_params(self) -> Tuple[int, int]:
        """(total, trainable) scalar parameter counts."""
        total = trainable = 0
        for p in self.parameters():
            total += p.size
            if p.requires_grad:
                trainable += p.size
        return total, trainable

    def modules(self) -> Iterator["Module"]:
        yield self
        for value in self.__dict__.values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise ConfigurationError(
                f"state dict mismatch: missing {missing[:4]}, unexpected {extra[:4]}"
            )
        for name, p in own.items():
            arr = np.asarray(state[name])
            if tuple(arr.shape) != tuple(p.shape):
                raise ConfigurationError(
                    f"shape mismatch for {name}: model {tuple(p.shape)} vs file {tuple(arr.shape)}"
                )
            p.data = arr.astype(p.dtype)


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 bias: bool = True, dtype=np.float32):
        super().__init__()
        bound = math.sqrt(6.0 / (in_dim + out_dim))
        self.weight = Tensor(rng.uniform(-bound, bound, (in_dim, out_dim)),
                             requires_grad=True, dtype=dtype)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True, dtype=dtype) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = tc.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y

    __call__ = forward


class Embedding(Module):
    def __init__(self, num_embeddings: int, dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.weight = Tensor(rng.normal(0.0, dim ** -0.5, (num_embeddings, dim)),
                             requires_grad=True, dtype=dtype)

    def forward(self, ids: np.ndarray) -> Tensor:
        return tc.take(self.weight, np.asarray(ids, dtype=np.int64), axis=0)

    __call__ = forward


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.gamma = Tensor(np.ones(dim), requires_grad=True, dtype=dtype)
        self.beta = Tensor(np.zeros(dim), requires_grad=True, dtype=dtype)
        self._eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return tc.layer_norm(x, self.gamma, self.beta, self._eps)

    __call__ = forward


class Dropout(Module):
    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        self._rate = rate
        self._rng = rng

    def forward(self, x: Tensor) -> Tensor:
        return tc.dropout(x, self._rate, self._rng, training=self.training)

    __call__ = forward


class LSTM(Module):
    """Single-direction LSTM over (B, T, D) inputs; returns (B, T, H)."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        bound = 1.0 / math.sqrt(hidden_dim)
        self.w_ih = Tensor(rng.uniform(-bound, bound, (input_dim, 4 * hidden_dim)),
                           requires_grad=True, dtype=dtype)
        self.w_hh = Tensor(rng.uniform(-bound, bound, (hidden_dim, 4 * hidden_dim)),
                           requires_grad=True, dtype=dtype)
        bias = np.zeros(4 * hidden_dim)
        bias[hidden_dim:2 * hidden_dim] = 1.0  # forget-gate bias
        self.bias = Tensor(bias, requires_grad=True, dtype=dtype)
        self.hidden_dim = hidden_dim

    def forward(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        h_dim = self.hidden_dim
        pre = tc.matmul(x, self.w_ih) + self.bias  # (B, T, 4H)
        h = Tensor(np.zeros((b, h_dim)), dtype=x.dtype)
        c = Tensor(np.zeros((b, h_dim)), dtype=x.dtype)
        outputs = []
        for step in range(t):
            gates = pre[:, step] + tc.matmul(h, self.w_hh)
            i = tc.sigmoid(gates[:, :h_dim])
            f = tc.sigmoid(gates[:, h_dim:2 * h_dim])
            g = tc.tanh(gates[:, 2 * h_dim:3 * h_dim])
            o = tc.sigmoid(gates[:, 3 * h_dim:])
            c = f * c + i * g
            h = o * tc.tanh(c)
            outputs.append(tc.reshape(h, (b, 1, h_dim)))
        return tc.concat(outputs, axis=1)

    __call__ = forward


def reverse_padded(x: Tensor, lengths: np.ndarray) -> Tensor:
    """Reverse each row's valid prefix, leaving padding in place at the end."""
    b, t = x.shape[0], x.shape[1]
    idx = np.tile(np.arange(t), (b, 1))
    for row, n in enumerate(lengths):
        idx[row, :n] = np.arange(n - 1, -1, -1)
    full = np.broadcast_to(idx[:, :, None], x.shape).copy()
    return tc.take_along(x, full, axis=1)


class BiLSTM(Module):
    """Bidirectional LSTM; output dim is 2 * hidden_dim.

    The backward direction runs on sequences reversed within their valid
    length, so padded frames never contaminate valid outputs.
    """

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.fwd = LSTM(input_dim, hidden_dim, rng, dtype)
        self.bwd = LSTM(input_dim, hidden_dim, rng, dtype)

    def forward(self, x: Tensor, lengths: np.ndarray) -> Tensor:
        out_f = self.fwd(x)
        rev = reverse_padded(x, lengths)
        out_b = reverse_padded(self.bwd(rev), lengths)
        return tc.concat([out_f, out_b], axis=-1)

    __call__ = forward


def sinusoidal_positions(length: int, dim: int, dtype=np.float32) -> np.ndarray:
    """Standard fixed sin/cos position table of shape (length, dim)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(0, dim, 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, i / dim)
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : dim // 2])
    return table.astype(dtype)


class PositionalEncoding(Module):
    def __init__(self, dim: int, dtype=np.float32, initial_len: int = 512):
        super().__init__()
        self._dim = dim
        self._dtype = dtype
        self._table = sinusoidal_positions(initial_len, dim, dtype)

    def forward(self, x: Tensor, offset: int = 0) -> Tensor:
        t = x.shape[-2]
        if offset + t > self._table.shape[0]:
            self._table = sinusoidal_positions(2 * (offset + t), self._dim, self._dtype)
        return x + Tensor(self._table[offset:offset + t], dtype=x.dtype)

    __call__ = forward


NEG_FILL = -1e9  # attention logits at masked positions


class MultiHeadAttention(Module):
    """Scaled dot-product attention with ``num_heads`` heads of dim D/H each."""

    def __init__(self, dim: int, num_heads: int, rng: np.random.Generator,
                 dropout_rate: float = 0.0, dtype=np.float32):
        super().__init__()
        if dim % num_heads:
            raise ConfigurationError(f"model dim {dim} not divisible by {num_heads} heads")
        self.wq = Linear(dim, dim, rng, dtype=dtype)
        self.wk = Linear(dim, dim, rng, dtype=dtype)
        self.wv = Linear(dim, dim, rng, dtype=dtype)
        self.wo = Linear(dim, dim, rng, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.last_attention: Optional[np.ndarray] = None

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return tc.transpose(tc.reshape(x, (b, t, self.num_heads, self.head_dim)), (0, 2, 1, 3))

    def forward(self, query: Tensor, memory: Tensor,
                key_valid: Optional[np.ndarray] = None, causal: bool = False) -> Tensor:
        b, tq, dim = query.shape
        tk = memory.shape[1]
        q = self._split(self.wq(query))
        k = self._split(self.wk(memory))
        v = self._split(self.wv(memory))
        scores = tc.matmul(q, tc.transpose(k, (0, 1, 3, 2))) * (1.0 / math.sqrt(self.head_dim))
        mask = np.zeros((b, 1, tq, tk), dtype=bool)
        if key_valid is not None:
            mask |= ~np.asarray(key_valid, dtype=bool)[:, None, None, :]
        if causal:
            mask |= np.triu(np.ones((tq, tk), dtype=bool), k=1)[None, None]
        if mask.any():
            scores = tc.masked_fill(scores, mask, NEG_FILL)
        attn = tc.softmax(scores, axis=-1)
        self.last_attention = attn.data
        attn = self.drop(attn)
        ctx = tc.matmul(attn, v)
        ctx = tc.reshape(tc.transpose(ctx, (0, 2, 1, 3)), (b, tq, dim))
        return self.wo(ctx)

    __call__ = forward


class FeedForward(Module):
    def __init__(self, dim: int, hidden: int, rng: np.random.Generator,
                 dropout_rate: float = 0.0, activation: str = "relu",
                 pre_norm: bool = False, dtype=np.float32):
        super().__init__()
        self.norm = LayerNorm(dim, dtype=dtype) if pre_norm else None
        self.lin1 = Linear(dim, hidden, rng, dtype=dtype)
        self.lin2 = Linear(hidden, dim, rng, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)
        self._act = tc.silu if activation == "silu" else tc.relu

    def forward(self, x: Tensor) -> Tensor:
        if self.norm is not None:
            x = self.norm(x)
        return self.drop(self.lin2(self.drop(self._act(self.lin1(x)))))

    __call__ = forward


class TransformerEncoderBlock(Module):
    """Pre-norm self-attention block (trains without LR warmup)."""

    def __init__(self, dim: int, num_heads: int, ff_dim: int, rng: np.random.Generator,
                 dropout_rate: float = 0.1, dtype=np.float32):
        super().__init__()
        self.attn = MultiHeadAttention(dim, num_heads, rng, dropout_rate, dtype)
        self.ff = FeedForward(dim, ff_dim, rng, dropout_rate, dtype=dtype)
        self.ln1 = LayerNorm(dim, dtype=dtype)
        self.ln2 = LayerNorm(dim, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, x: Tensor, key_valid: Optional[np.ndarray] = None) -> Tensor:
        y = self.ln1(x)
        x = x + self.drop(self.attn(y, y, key_valid))
        return x + self.drop(self.ff(self.ln2(x)))

    __call__ = forward


class TransformerDecoderBlock(Module):
    """Pre-norm block: causal self-attention, then encoder-decoder attention."""

    def __init__(self, dim: int, num_heads: int, ff_dim: int, rng: np.random.Generator,
                 dropout_rate: float = 0.1, dtype=np.float32):
        super().__init__()
        self.self_attn = MultiHeadAttention(dim, num_heads, rng, dropout_rate, dtype)
        self.cross_attn = MultiHeadAttention(dim, num_heads, rng, dropout_rate, dtype)
        self.ff = FeedForward(dim, ff_dim, rng, dropout_rate, dtype=dtype)
        self.ln1 = LayerNorm(dim, dtype=dtype)
        self.ln2 = LayerNorm(dim, dtype=dtype)
        self.ln3 = LayerNorm(dim, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, x: Tensor, memory: Tensor,
                memory_valid: Optional[np.ndarray] = None,
                self_valid: Optional[np.ndarray] = None) -> Tensor:
        y = self.ln1(x)
        x = x + self.drop(self.self_attn(y, y, self_valid, causal=True))
        x = x + self.drop(self.cross_attn(self.ln2(x), memory, memory_valid))
        return x + self.drop(self.ff(self.ln3(x)))

    __call__ = forward


class ConformerConvModule(Module):
    """Pointwise GLU, depthwise time convolution, norm, swish, pointwise."""

    def __init__(self, dim: int, kernel_size: int, rng: np.random.Generator,
                 dropout_rate: float = 0.1, dtype=np.float32):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ConfigurationError(f"depthwise kernel must be odd, got {kernel_size}")
        self.norm_in = LayerNorm(dim, dtype=dtype)
        self.pw1 = Linear(dim, 2 * dim, rng, dtype=dtype)
        bound = 1.0 / math.sqrt(kernel_size)
        self.dw_weight = Tensor(rng.uniform(-bound, bound, (kernel_size, dim)),
                                requires_grad=True, dtype=dtype)
        self.norm_mid = LayerNorm(dim, dtype=dtype)  # batch-independent
        self.pw2 = Linear(dim, dim, rng, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)
        self.kernel_size = kernel_size

    def forward(self, x: Tensor, valid: Optional[np.ndarray] = None) -> Tensor:
        b, t, dim = x.shape
        x = self.norm_in(x)
        if valid is not None:
            # zero padding so the time convolution cannot read pad content
            x = x * Tensor(np.asarray(valid, dtype=x.dtype)[:, :, None], dtype=x.dtype)
        x = self.pw1(x)
        x = x[:, :, :dim] * tc.sigmoid(x[:, :, dim:])
        half = self.kernel_size // 2
        padded = tc.pad(x, ((0, 0), (half, half), (0, 0)))
        acc = None
        for j in range(self.kernel_size):
            term = padded[:, j:j + t, :] * self.dw_weight[j]
            acc = term if acc is None else acc + term
        x = tc.silu(self.norm_mid(acc))
        return self.drop(self.pw2(x))

    __call__ = forward


class ConformerBlock(Module):
    """Half-step FF, self-attention, convolution module, half-step FF, norm."""

    def __init__(self, dim: int, num_heads: int, ff_dim: int, kernel_size: int,
                 rng: np.random.Generator, dropout_rate: float = 0.1, dtype=np.float32):
        super().__init__()
        self.ff1 = FeedForward(dim, ff_dim, rng, dropout_rate, activation="silu",
                               pre_norm=True, dtype=dtype)
        self.ln_attn = LayerNorm(dim, dtype=dtype)
        self.attn = MultiHeadAttention(dim, num_heads, rng, dropout_rate, dtype)
        self.conv = ConformerConvModule(dim, kernel_size, rng, dropout_rate, dtype)
        self.ff2 = FeedForward(dim, ff_dim, rng, dropout_rate, activation="silu",
                               pre_norm=True, dtype=dtype)
        self.ln_out = LayerNorm(dim, dtype=dtype)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, x: Tensor, key_valid: Optional[np.ndarray] = None) -> Tensor:
        x = x + 0.5 * self.ff1(x)
        y = self.ln_attn(x)
        x = x + self.drop(self.attn(y, y, key_valid))
        x = x + self.conv(x, key_valid)
        x = x + 0.5 * self.ff2(x)
        return self.ln_out(x)

    __call__ = forward


class Adam:
    """Adaptive-moment optimizer with optional global-norm gradient clipping."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 clip_norm: Optional[float] = 5.0):
        self._params = [p for p in params if p.requires_grad]
        self.lr = lr
        self._betas = betas
        self._eps = eps
        self._clip = clip_norm
        self._step = 0
        self._m = [np.zeros_like(p.data) for p in self._params]
        self._v = [np.zeros_like(p.data) for p in self._params]

    def zero_grad(self) -> None:
        for p in self._params:
            p.zero_grad()

    def step(self) -> None:
        self._step += 1
        b1, b2 = self._betas
        grads = [np.asarray(p.grad, dtype=np.float64) for p in self._params]
        if self._clip is not None:
            total = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if total > self._clip:
                scale = self._clip / (total + 1e-12)
                grads = [g * scale for g in grads]
        corr1 = 1.0 - b1 ** self._step
        corr2 = 1.0 - b2 ** self._step
        for p, g, m, v in zip(self._params, grads, self._m, self._v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (self.lr / corr1) * m / (np.sqrt(v / corr2) + self._eps)
            p.data = (p.data - update.astype(p.dtype)).astype(p.dtype)

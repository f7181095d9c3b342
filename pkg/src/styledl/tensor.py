"""Dense float64 tensors with reverse-mode automatic differentiation.

The engine is deliberately small. Values are row-major numpy arrays in
float64. Each op builds the implicit graph by storing its parents and a
gradient closure on the output tensor; ``backward()`` walks that DAG
once in reverse topological order and accumulates gradients additively,
so fan-out sums contributions exactly. Elementwise ops accept equal
shapes or a scalar, nothing else; shape problems raise
``ContractViolation`` eagerly rather than relying on numpy broadcasting.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, TrainingError


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _sum_to_shape(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Undo broadcasting: reduce g back to `shape` by summing extra axes."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


class Tensor:
    """A float64 n-d array, optionally tracked for reverse-mode autodiff."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._grad_fn: Callable[[np.ndarray], None] | None = None

    # ------------------------------------------------------------- basics
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractViolation(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # --------------------------------------------------------- arithmetic
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -other)

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractViolation("division only by python scalars")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)

    # ----------------------------------------------------------- reshapes
    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        new = self.data.reshape(shape)
        src_shape = self.data.shape

        def grad_fn(g):
            _accumulate(self, g.reshape(src_shape))

        return _result(new, (self,), grad_fn)

    def flatten(self) -> "Tensor":
        """Row-major flattening to a 1-d tensor."""
        return self.reshape(self.data.size)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        if sorted(axes) != list(range(self.data.ndim)):
            raise ContractViolation(f"transpose axes {axes} invalid for ndim {self.data.ndim}")
        inv = tuple(np.argsort(axes))

        def grad_fn(g):
            _accumulate(self, np.transpose(g, inv))

        return _result(np.transpose(self.data, axes), (self,), grad_fn)

    # --------------------------------------------------------- reductions
    def sum(self, axis: int | None = None) -> "Tensor":
        if axis is None:
            out = self.data.sum()

            def grad_fn(g):
                _accumulate(self, np.full_like(self.data, float(g)))

            return _result(out, (self,), grad_fn)
        axis = self._check_axis(axis, "sum")
        out = self.data.sum(axis=axis)

        def grad_fn_ax(g):
            _accumulate(self, np.broadcast_to(np.expand_dims(g, axis), self.data.shape).copy())

        return _result(out, (self,), grad_fn_ax)

    def mean(self, axis: int) -> "Tensor":
        """Mean along one axis; the axis is dropped from the shape."""
        axis = self._check_axis(axis, "mean")
        n = self.data.shape[axis]
        out = self.data.mean(axis=axis)

        def grad_fn(g):
            spread = np.broadcast_to(np.expand_dims(g / n, axis), self.data.shape)
            _accumulate(self, spread.copy())

        return _result(out, (self,), grad_fn)

    def max(self, axis: int) -> "Tensor":
        """Max along one axis; gradient routes to the first argmax."""
        axis = self._check_axis(axis, "max")
        idx = np.argmax(self.data, axis=axis)
        out = np.max(self.data, axis=axis)

        def grad_fn(g):
            gx = np.zeros_like(self.data)
            np.put_along_axis(gx, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis)
            _accumulate(self, gx)

        return _result(out, (self,), grad_fn)

    def _check_axis(self, axis: int, op: str) -> int:
        if not -self.data.ndim <= axis < self.data.ndim:
            raise ContractViolation(f"{op}: axis {axis} out of range for shape {self.shape}")
        return axis % self.data.ndim

    # -------------------------------------------------------- activations
    def relu(self) -> "Tensor":
        mask = self.data > 0

        def grad_fn(g):
            _accumulate(self, g * mask)

        return _result(self.data * mask, (self,), grad_fn)

    def leaky_relu(self, slope: float = 0.2) -> "Tensor":
        pos = self.data > 0
        out = np.where(pos, self.data, slope * self.data)

        def grad_fn(g):
            _accumulate(self, g * np.where(pos, 1.0, slope))

        return _result(out, (self,), grad_fn)

    def sigmoid(self) -> "Tensor":
        x = self.data
        out = np.empty_like(x)
        p = x >= 0
        out[p] = 1.0 / (1.0 + np.exp(-x[p]))
        e = np.exp(x[~p])
        out[~p] = e / (1.0 + e)

        def grad_fn(g):
            _accumulate(self, g * out * (1.0 - out))

        return _result(out, (self,), grad_fn)

    def softmax(self, axis: int) -> "Tensor":
        axis = self._check_axis(axis, "softmax")
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=axis, keepdims=True)

        def grad_fn(g):
            dot = (g * out).sum(axis=axis, keepdims=True)
            _accumulate(self, out * (g - dot))

        return _result(out, (self,), grad_fn)

    def log(self) -> "Tensor":
        def grad_fn(g):
            _accumulate(self, g / self.data)

        return _result(np.log(self.data), (self,), grad_fn)

    def clamp_min(self, floor: float) -> "Tensor":
        mask = self.data > floor

        def grad_fn(g):
            _accumulate(self, g * mask)

        return _result(np.maximum(self.data, floor), (self,), grad_fn)

    # ----------------------------------------------------------- backward
    def backward(self) -> None:
        """Populate .grad on every tracked tensor reachable from this scalar."""
        if self.data.size != 1:
            raise ContractViolation(f"backward() needs a scalar loss, got shape {self.shape}")
        if not np.isfinite(self.data).all():
            raise TrainingError(f"loss is not finite: {float(self.data.reshape(()))}")
        order: list[Tensor] = []
        seen = {id(self)}
        stack: list[tuple[Tensor, Iterable[Tensor]]] = [(self, iter(self._parents))]
        while stack:
            node, it = stack[-1]
            for parent in it:
                if id(parent) not in seen:
                    seen.add(id(parent))
                    stack.append((parent, iter(parent._parents)))
                    break
            else:
                order.append(node)
                stack.pop()
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._grad_fn is not None and node.grad is not None:
                node._grad_fn(node.grad)


def _result(data: np.ndarray, parents: tuple[Tensor, ...], grad_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._grad_fn = grad_fn
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64)
    else:
        t.grad = t.grad + g


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_elementwise(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ContractViolation(
            f"{op}: shapes {a.shape} and {b.shape} differ (only scalars broadcast)"
        )


# ------------------------------------------------------------ elementwise
def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_elementwise(a, b, "add")

    def grad_fn(g):
        _accumulate(a, _sum_to_shape(g, a.data.shape))
        _accumulate(b, _sum_to_shape(g, b.data.shape))

    return _result(a.data + b.data, (a, b), grad_fn)


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_elementwise(a, b, "mul")

    def grad_fn(g):
        _accumulate(a, _sum_to_shape(g * b.data, a.data.shape))
        _accumulate(b, _sum_to_shape(g * a.data, b.data.shape))

    return _result(a.data * b.data, (a, b), grad_fn)


# ----------------------------------------------------------------- matmul
def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with numpy batching over leading axes.

    Supports [M,K]@[K,N] plus batched forms where either side carries
    leading axes; gradients are reduced back to each operand's shape.
    """
    a, b = _coerce(a), _coerce(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ContractViolation("matmul operands need ndim >= 2")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ContractViolation(f"matmul: inner dims {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)

    def grad_fn(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            _accumulate(a, _sum_to_shape(ga, a.data.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            _accumulate(b, _sum_to_shape(gb, b.data.shape))

    return _result(out, (a, b), grad_fn)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map x @ w + b with the bias broadcast over leading axes."""
    out = matmul(x, w)
    if b is None:
        return out
    if b.data.ndim != 1 or b.data.shape[0] != out.data.shape[-1]:
        raise ContractViolation(f"linear bias shape {b.shape} vs output {out.shape}")

    def grad_fn(g):
        _accumulate(out, g)
        _accumulate(b, g.reshape(-1, g.shape[-1]).sum(axis=0))

    return _result(out.data + b.data, (out, b), grad_fn)


# ------------------------------------------------------------ convolution
def _im2col(xp: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    bsz, cin = xp.shape[:2]
    cols = np.empty((bsz, cin, k, k, ho, wo), dtype=np.float64)
    for ki in range(k):
        for kj in range(k):
            cols[:, :, ki, kj] = xp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride]
    return cols.reshape(bsz, cin * k * k, ho * wo)


def _col2im(gcols: np.ndarray, xshape, k: int, stride: int, pad: int, ho: int, wo: int) -> np.ndarray:
    bsz, cin, h, w = xshape
    gxp = np.zeros((bsz, cin, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    g6 = gcols.reshape(bsz, cin, k, k, ho, wo)
    for ki in range(k):
        for kj in range(k):
            gxp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += g6[:, :, ki, kj]
    if pad:
        return gxp[:, :, pad : pad + h, pad : pad + w]
    return gxp


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-d cross-correlation over [B,Cin,H,W] with weight [Cout,Cin,k,k].

    Output extent follows the floor convention
    H' = (H + 2*pad - k) // stride + 1, which is what lets a 3x3
    stride-2 kernel with pad 1 halve an even input exactly.
    """
    x, w = _coerce(x), _coerce(w)
    if x.data.ndim != 4:
        raise ContractViolation(f"conv2d input must be [B,C,H,W], got {x.shape}")
    if w.data.ndim != 4 or w.data.shape[-1] != w.data.shape[-2]:
        raise ContractViolation(f"conv2d weight must be [Cout,Cin,k,k], got {w.shape}")
    if x.data.shape[1] != w.data.shape[1]:
        raise ContractViolation(f"conv2d channels: input {x.shape} vs weight {w.shape}")
    if stride < 1 or pad < 0:
        raise ConfigurationError(f"conv2d stride={stride}, pad={pad}")
    bsz, cin, h, wid = x.data.shape
    cout, _, k, _ = w.data.shape
    if h + 2 * pad < k or wid + 2 * pad < k:
        raise ConfigurationError(f"kernel {k} exceeds padded input {h + 2 * pad}x{wid + 2 * pad}")
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wid + 2 * pad - k) // stride + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = _im2col(xp, k, stride, ho, wo)
    wm = w.data.reshape(cout, cin * k * k)
    out = np.matmul(wm, cols)
    if b is not None:
        if b.data.shape != (cout,):
            raise ContractViolation(f"conv2d bias shape {b.shape}, expected ({cout},)")
        out = out + b.data.reshape(1, cout, 1)
    parents = (x, w) if b is None else (x, w, b)

    def grad_fn(g):
        g3 = g.reshape(bsz, cout, ho * wo)
        if w.requires_grad:
            gw = np.matmul(g3, cols.transpose(0, 2, 1)).sum(axis=0)
            _accumulate(w, gw.reshape(w.data.shape))
        if b is not None and b.requires_grad:
            _accumulate(b, g3.sum(axis=(0, 2)))
        if x.requires_grad:
            gcols = np.matmul(wm.T, g3)
            _accumulate(x, _col2im(gcols, x.data.shape, k, stride, pad, ho, wo))

    return _result(out.reshape(bsz, cout, ho, wo), parents, grad_fn)


# ------------------------------------------------------------- layer norm
def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize each sample of [B,C,H,W] over (C,H,W), then apply a
    per-channel affine. Mean 0 / variance 1 holds before the affine."""
    if x.data.ndim != 4:
        raise ContractViolation(f"layer_norm input must be [B,C,H,W], got {x.shape}")
    c = x.data.shape[1]
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ContractViolation(f"layer_norm affine shapes {gamma.shape}/{beta.shape} for C={c}")
    axes = (1, 2, 3)
    mu = x.data.mean(axis=axes, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    gb = gamma.data.reshape(1, c, 1, 1)
    out = gb * xhat + beta.data.reshape(1, c, 1, 1)

    def grad_fn(g):
        if gamma.requires_grad:
            _accumulate(gamma, (g * xhat).sum(axis=(0, 2, 3)))
        if beta.requires_grad:
            _accumulate(beta, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dxhat = g * gb
            term_mean = dxhat.mean(axis=axes, keepdims=True)
            term_proj = (dxhat * xhat).mean(axis=axes, keepdims=True)
            _accumulate(x, inv_std * (dxhat - term_mean - xhat * term_proj))

    return _result(out, (x, gamma, beta), grad_fn)


# ------------------------------------------------------------- resampling
def _nearest_index(src: int, dst: int) -> np.ndarray:
    return (np.arange(dst) * src) // dst


def resample_nearest(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Nearest-neighbour spatial resample of [...,H,W] in either direction.

    Source index for output row i is floor(i * H / out_h); the gradient
    scatter-adds back, so replicated cells sum their contributions.
    """
    if x.data.ndim < 2:
        raise ContractViolation(f"resample needs spatial trailing axes, got {x.shape}")
    if out_h < 1 or out_w < 1:
        raise ContractViolation(f"resample target {out_h}x{out_w}")
    h, w = x.data.shape[-2:]
    rows = _nearest_index(h, out_h)
    cols = _nearest_index(w, out_w)
    out = x.data[..., rows[:, None], cols[None, :]]
    lead_shape = x.data.shape[:-2]
    lead = int(np.prod(lead_shape)) if lead_shape else 1

    def grad_fn(g):
        gx = np.zeros((lead, h, w), dtype=np.float64)
        g3 = g.reshape(lead, out_h, out_w)
        np.add.at(gx, (np.arange(lead)[:, None, None], rows[None, :, None], cols[None, None, :]), g3)
        _accumulate(x, gx.reshape(x.data.shape))

    return _result(out, (x,), grad_fn)


def upsample_nearest(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Nearest-neighbour upsampling; refuses to shrink."""
    h, w = x.data.shape[-2:]
    if out_h < h or out_w < w:
        raise ContractViolation(f"upsample from {h}x{w} to {out_h}x{out_w} would shrink")
    return resample_nearest(x, out_h, out_w)


# ------------------------------------------------------- shape assembly
def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    """Concatenate along an existing axis; gradients split back."""
    if not parts:
        raise ContractViolation("concat of zero tensors")
    parts = [_coerce(p) for p in parts]
    ndim = parts[0].data.ndim
    if not -ndim <= axis < ndim:
        raise ContractViolation(f"concat axis {axis} for ndim {ndim}")
    axis = axis % ndim
    for p in parts[1:]:
        if p.data.ndim != ndim:
            raise ContractViolation("concat rank mismatch")
        for ax in range(ndim):
            if ax != axis and p.data.shape[ax] != parts[0].data.shape[ax]:
                raise ContractViolation(
                    f"concat off-axis extents differ: {parts[0].shape} vs {p.shape}"
                )
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + [p.data.shape[axis] for p in parts])

    def grad_fn(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * ndim
            sl[axis] = slice(lo, hi)
            _accumulate(p, g[tuple(sl)])

    return _result(out, tuple(parts), grad_fn)


def repeat_axis(x: Tensor, axis: int, times: int) -> Tensor:
    """Tile a length-1 axis `times` times; gradient sums back over it."""
    axis = x._check_axis(axis, "repeat_axis")
    if x.data.shape[axis] != 1:
        raise ContractViolation(f"repeat_axis needs extent 1 on axis {axis}, got {x.shape}")
    out = np.repeat(x.data, times, axis=axis)

    def grad_fn(g):
        _accumulate(x, g.sum(axis=axis, keepdims=True))

    return _result(out, (x,), grad_fn)


def grad_reverse(x: Tensor) -> Tensor:
    """Identity forward; multiplies the incoming gradient by -1."""

    def grad_fn(g):
        _accumulate(x, -g)

    return _result(x.data.copy(), (x,), grad_fn)


# ----------------------------------------------------- parameters and SGD
def he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    """Kaiming-style fan-in init, the default for every weight here."""
    if fan_in < 1:
        raise ConfigurationError(f"fan_in {fan_in}")
    scale = np.sqrt(2.0 / fan_in)
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


def zeros_param(shape: tuple[int, ...] | int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones_param(shape: tuple[int, ...] | int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


class SGD:
    """Momentum SGD with decoupled-from-nothing classic weight decay.

    Update per parameter p with gradient g:
        v <- momentum * v + g + weight_decay * p
        p <- p - lr * v
    """

    def __init__(self, params: dict[str, Tensor], lr: float, momentum: float = 0.0,
                 weight_decay: float = 0.0):
        if lr < 0 or weight_decay < 0:
            raise ConfigurationError("negative optimizer hyperparameter")
        if not 0.0 <= momentum < 1.0:
            raise ConfigurationError(f"momentum {momentum} outside [0, 1)")
        self.params = dict(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {k: np.zeros_like(t.data) for k, t in self.params.items()}

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def step(self) -> None:
        for key, t in self.params.items():
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            v = self.momentum * self.velocity[key] + g + self.weight_decay * t.data
            self.velocity[key] = v
            t.data = t.data - self.lr * v

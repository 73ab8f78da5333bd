"""Differentiable primitives.

Every op returns a new Tensor and, under an active tape, registers a closure
that maps the output gradient to one gradient per input (None for inputs
that need none).
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import ShapeMismatch, Tensor, as_tensor, make


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum g down to shape, undoing numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _broadcast_shape(a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"cannot broadcast {a.shape} with {b.shape}") from None


# elementwise arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    return make(a.data + b.data, (a, b),
                lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    return make(a.data - b.data, (a, b),
                lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    """Hadamard product with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    return make(a.data * b.data, (a, b),
                lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


hadamard = mul


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}")
    return make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def bilinear_slices(x, w, y) -> Tensor:
    """Row-wise bilinear forms: out[e, s] = x[e] . w[s] . y[e].

    x, y are (E, d); w is (a, d, d); the result is (E, a).
    """
    x, w, y = as_tensor(x), as_tensor(w), as_tensor(y)
    if x.ndim != 2 or y.shape != x.shape or w.ndim != 3 or w.shape[1:] != (x.shape[1],) * 2:
        raise ShapeMismatch(f"bilinear_slices x{x.shape} w{w.shape} y{y.shape}")
    a, d, _ = w.shape
    # xw[e, s, :] = x[e] @ w[s]
    xw = (x.data @ w.data.transpose(1, 0, 2).reshape(d, a * d)).reshape(-1, a, d)
    out = np.einsum("esf,ef->es", xw, y.data)

    def backward(g):
        wy = (y.data @ w.data.transpose(2, 0, 1).reshape(d, a * d)).reshape(-1, a, d)
        gx = np.einsum("es,esd->ed", g, wy)
        gy = np.einsum("es,esf->ef", g, xw)
        # gw[s] = sum_e g[e, s] * outer(x[e], y[e])
        gx_rows = (g[:, :, None] * x.data[:, None, :]).reshape(len(g), a * d)
        gw = (gx_rows.T @ y.data).reshape(a, d, d)
        return gx, gw, gy

    return make(out, (x, w, y), backward)


# shape manipulation

def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make(out, tuple(tensors), lambda g: tuple(np.split(g, sizes, axis=axis)))


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    return make(out, (x,), lambda g: (g.reshape(x.shape),))


def slice_cols(x, start: int, stop: int) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return make(x.data[..., start:stop], (x,), backward)


def transpose(x) -> Tensor:
    x = as_tensor(x)
    return make(x.data.T, (x,), lambda g: (g.T,))


# reductions

def reduce_sum(x, axis=None) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make(out, (x,), backward)


def reduce_max(x, axis: int = 0) -> Tensor:
    """Max along axis; the gradient goes to the first maximal entry."""
    x = as_tensor(x)
    arg = np.argmax(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(arg, axis), axis).squeeze(axis)

    def backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis)
        return (full,)

    return make(out, (x,), backward)


# nonlinearities

def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def leaky_relu(x, slope: float = 0.01) -> Tensor:
    x = as_tensor(x)
    scale = np.where(x.data > 0, 1.0, slope)
    return make(x.data * scale, (x,), lambda g: (g * scale,))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return make(out, (x,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _sigmoid(x.data)
    return make(out, (x,), lambda g: (g * out * (1.0 - out),))


def softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    ez = np.exp(z)
    out = ez / ez.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make(out, (x,), backward)


def dropout(x, p: float, train: bool, key=None) -> Tensor:
    """Inverted dropout with a counter-based mask.

    key is a tuple of non-negative ints, typically (seed, step, site); the
    same key always yields the same mask.
    """
    x = as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if key is None:
        raise ValueError("dropout in training mode needs a key")
    bitgen = np.random.Philox(np.random.SeedSequence([int(k) for k in key]))
    keep = np.random.Generator(bitgen).random(x.shape) >= p
    scale = keep / (1.0 - p)
    return make(x.data * scale, (x,), lambda g: (g * scale,))


# graph primitives

def gather(x, index) -> Tensor:
    """Rows x[index]."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    n = x.shape[0]

    def backward(g):
        flat = g.reshape(len(index), -1)
        return (kernels.scatter_add_rows(flat, index, n).reshape(x.shape),)

    return make(x.data[index], (x,), backward)


def segment_sum(x, seg, n: int) -> Tensor:
    """out[s] = sum of rows x[k] with seg[k] == s."""
    x = as_tensor(x)
    seg = np.asarray(seg, dtype=np.int64)
    if x.ndim != 2 or len(seg) != x.shape[0]:
        raise ShapeMismatch(f"segment_sum of {x.shape} with {len(seg)} ids")
    out = kernels.scatter_add_rows(x.data, seg, n)
    return make(out, (x,), lambda g: (g[seg],))


def segment_max(x, seg, n: int) -> Tensor:
    """Column-wise max per segment; ties resolve to the first row."""
    x = as_tensor(x)
    seg = np.asarray(seg, dtype=np.int64)
    if x.ndim != 2 or len(seg) != x.shape[0]:
        raise ShapeMismatch(f"segment_max of {x.shape} with {len(seg)} ids")
    out, arg = kernels.segment_max_rows(x.data, seg, n)

    def backward(g):
        full = np.zeros_like(x.data)
        s, c = np.nonzero(arg >= 0)
        full[arg[s, c], c] = g[s, c]
        return (full,)

    return make(out, (x,), backward)


def segment_softmax(x, seg, n: int) -> Tensor:
    """Softmax of a 1-D score vector within each segment."""
    x = as_tensor(x)
    seg = np.asarray(seg, dtype=np.int64)
    if x.ndim != 1 or len(seg) != len(x.data):
        raise ShapeMismatch(f"segment_softmax of {x.shape} with {len(seg)} ids")
    col = x.data[:, None]
    top, _ = kernels.segment_max_rows(col, seg, n)
    ez = np.exp(col - top[seg])
    total = kernels.scatter_add_rows(ez, seg, n)
    out = (ez / total[seg])[:, 0]

    def backward(g):
        dot = kernels.scatter_add_rows((g * out)[:, None], seg, n)[seg, 0]
        return (out * (g - dot),)

    return make(out, (x,), backward)


def scale_slices(alpha, x) -> Tensor:
    """Scale each of the a equal column blocks of x by the matching alpha column.

    alpha is (E, a) and x is (E, d) with a dividing d.
    """
    alpha, x = as_tensor(alpha), as_tensor(x)
    e, a = alpha.shape
    if x.ndim != 2 or x.shape[0] != e or x.shape[1] % a:
        raise ShapeMismatch(f"scale_slices alpha{alpha.shape} x{x.shape}")
    width = x.shape[1] // a
    blocks = x.data.reshape(e, a, width)
    out = (blocks * alpha.data[:, :, None]).reshape(x.shape)

    def backward(g):
        gb = g.reshape(e, a, width)
        return (gb * blocks).sum(axis=2), (gb * alpha.data[:, :, None]).reshape(x.shape)

    return make(out, (alpha, x), backward)


def maximum(a, b) -> Tensor:
    """Elementwise max of equal-shape tensors; ties send the gradient to a."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"maximum {a.shape} vs {b.shape}")
    pick = a.data >= b.data
    return make(np.where(pick, a.data, b.data), (a, b),
                lambda g: (g * pick, g * ~pick))


# losses

def bce_with_logits(logits, targets, mask=None) -> Tensor:
    """Mean binary cross-entropy over unmasked entries, stable in the logits."""
    logits = as_tensor(logits)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeMismatch(f"targets {y.shape} vs logits {logits.shape}")
    m = np.ones_like(y) if mask is None else np.asarray(mask, dtype=np.float64)
    count = max(m.sum(), 1.0)
    z = logits.data
    y = np.where(m > 0, y, 0.0)
    loss = (np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))) * m
    return make(np.array(loss.sum() / count), (logits,),
                lambda g: (g * (_sigmoid(z) - y) * m / count,))


def mse(pred, targets, mask=None) -> Tensor:
    """Mean squared error over unmasked entries."""
    pred = as_tensor(pred)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != pred.shape:
        raise ShapeMismatch(f"targets {y.shape} vs predictions {pred.shape}")
    m = np.ones_like(y) if mask is None else np.asarray(mask, dtype=np.float64)
    count = max(m.sum(), 1.0)
    diff = np.where(m > 0, pred.data - y, 0.0)
    return make(np.array((diff * diff).sum() / count), (pred,),
                lambda g: (g * 2.0 * diff / count,))

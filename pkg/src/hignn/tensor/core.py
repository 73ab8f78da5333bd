"""Tensor and tape for reverse-mode differentiation.

Operations are recorded only while a Tape is active on the current thread.
Each recorded node keeps its parents and a closure mapping the output
gradient to parent gradients. Backward walks the tape in reverse creation
order, which is a valid reverse topological order.
"""

from __future__ import annotations

import threading

import numpy as np


class TensorError(ValueError):
    pass


class ShapeMismatch(TensorError):
    pass


class NonScalarLoss(TensorError):
    pass


class DoubleBackward(TensorError):
    pass


class NoTape(TensorError):
    pass


_local = threading.local()


def _stack() -> list:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape() -> "Tape | None":
    stack = _stack()
    return stack[-1] if stack else None


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_node")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._node = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self._node is None:
            raise NoTape("tensor was not produced under an active tape")
        self._node.tape.backward(self)

    # operator sugar
    def __add__(self, other):
        from .ops import add
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from .ops import sub
        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub
        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from .ops import matmul
        return matmul(self, other)

    def __neg__(self):
        from .ops import mul
        return mul(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("tape", "parents", "backward")

    def __init__(self, tape, parents, backward):
        self.tape = tape
        self.parents = parents
        self.backward = backward


class Tape:
    """Records differentiable operations in creation order.

    Use as a context manager; backward may run once per recording. Call
    reset() to reuse the tape.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.done = False

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def reset(self):
        for t in self.nodes:
            t._node = None
        self.nodes = []
        self.done = False

    def record(self, out: Tensor, parents, backward) -> Tensor:
        out.requires_grad = True
        out._node = _Node(self, parents, backward)
        self.nodes.append(out)
        return out

    def backward(self, loss: Tensor):
        if loss.data.size != 1:
            raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")
        if self.done:
            raise DoubleBackward("backward already ran on this tape; call reset() first")
        if loss._node is None or loss._node.tape is not self:
            raise NoTape("loss was not recorded on this tape")
        self.done = True
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for out in reversed(self.nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            node = out._node
            parent_grads = node.backward(g)
            for p, pg in zip(node.parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                if p._node is not None and p._node.tape is self:
                    key = id(p)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
                else:
                    # leaf parameter: accumulate into .grad
                    p.grad = pg.copy() if p.grad is None else p.grad + pg


def make(data, parents, backward) -> Tensor:
    """Wrap an op result, recording it when a tape is active and needed."""
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        tape.record(out, parents, backward)
    return out

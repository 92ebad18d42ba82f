"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Every op builds a node holding its output value and a closure that routes the
output gradient to the op's inputs. `backward` walks the graph once in
reverse topological order. All math is float64; softmax and log-sum-exp use
max subtraction for stability. Masking is additive with -inf entries, which
keeps masked attention weights exactly zero in both directions.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def param(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def constant(value) -> Tensor:
    return Tensor(value, requires_grad=False)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `g` down to `shape`, undoing numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _node(value, parents, backward) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(value, requires_grad=req, parents=tuple(parents), backward=backward if req else None)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_value = a.value + b.value

    def bw(g):
        _accumulate(a, _unbroadcast(g, a.value.shape))
        _accumulate(b, _unbroadcast(g, b.value.shape))

    return _node(out_value, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_value = a.value * b.value

    def bw(g):
        _accumulate(a, _unbroadcast(g * b.value, a.value.shape))
        _accumulate(b, _unbroadcast(g * a.value, b.value.shape))

    return _node(out_value, (a, b), bw)


def scale(a: Tensor, s: float) -> Tensor:
    out_value = a.value * s

    def bw(g):
        _accumulate(a, g * s)

    return _node(out_value, (a,), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_value = np.matmul(a.value, b.value)

    def bw(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.value, -1, -2))
            _accumulate(a, _unbroadcast(ga, a.value.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.value, -1, -2), g)
            _accumulate(b, _unbroadcast(gb, b.value.shape))

    return _node(out_value, (a, b), bw)


def reshape(a: Tensor, shape) -> Tensor:
    out_value = a.value.reshape(shape)

    def bw(g):
        _accumulate(a, g.reshape(a.value.shape))

    return _node(out_value, (a,), bw)


def transpose(a: Tensor, axes) -> Tensor:
    out_value = a.value.transpose(axes)
    inverse = tuple(np.argsort(axes))

    def bw(g):
        _accumulate(a, g.transpose(inverse))

    return _node(out_value, (a,), bw)


_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_K = 0.044715


def gelu(a: Tensor) -> Tensor:
    """Smooth tanh-form GELU (finite-difference friendly, unlike ReLU)."""
    x = a.value
    inner = _GELU_C * (x + _GELU_K * x**3)
    th = np.tanh(inner)
    out_value = 0.5 * x * (1.0 + th)

    def bw(g):
        d_inner = _GELU_C * (1.0 + 3.0 * _GELU_K * x**2)
        deriv = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th**2) * d_inner
        _accumulate(a, g * deriv)

    return _node(out_value, (a,), bw)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis, then scale and shift."""
    mu = x.value.mean(-1, keepdims=True)
    xc = x.value - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_value = xhat * gain.value + bias.value

    def bw(g):
        _accumulate(gain, _unbroadcast(g * xhat, gain.value.shape))
        _accumulate(bias, _unbroadcast(g, bias.value.shape))
        if x.requires_grad:
            dxhat = g * gain.value
            gx = inv * (
                dxhat
                - dxhat.mean(-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(-1, keepdims=True)
            )
            _accumulate(x, gx)

    return _node(out_value, (x, gain, bias), bw)


def masked_softmax(x: Tensor, mask_add: np.ndarray | None = None) -> Tensor:
    """Softmax over the last axis after adding `mask_add` (-inf blocks a key).

    Every row must keep at least one finite entry.
    """
    z = x.value if mask_add is None else x.value + mask_add
    m = z.max(-1, keepdims=True)
    e = np.exp(z - m)
    p = e / e.sum(-1, keepdims=True)

    def bw(g):
        dot = (g * p).sum(-1, keepdims=True)
        _accumulate(x, p * (g - dot))

    return _node(p, (x,), bw)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids)
    out_value = table.value[ids]

    def bw(g):
        if table.requires_grad:
            gt = np.zeros_like(table.value)
            np.add.at(gt, ids, g)
            _accumulate(table, gt)

    return _node(out_value, (table,), bw)


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    if rate <= 0.0:
        return a
    keep = (rng.random(a.value.shape) >= rate) / (1.0 - rate)
    out_value = a.value * keep

    def bw(g):
        _accumulate(a, g * keep)

    return _node(out_value, (a,), bw)


def cross_entropy(logits: Tensor, targets, ignore_id: int = -1) -> Tensor:
    """Mean negative log-likelihood over targets != ignore_id.

    `logits` is (N, V); returns a scalar. With zero contributing positions
    the loss is the constant 0 and no gradient flows.
    """
    t = np.asarray(targets)
    mask = t != ignore_id
    count = int(mask.sum())
    if count == 0:
        return constant(0.0)
    z = logits.value
    m = z.max(-1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(-1, keepdims=True))
    logp = z - lse
    rows = np.arange(len(t))
    safe_t = np.where(mask, t, 0)
    out_value = float(-(logp[rows, safe_t] * mask).sum() / count)

    def bw(g):
        if logits.requires_grad:
            d = np.exp(logp)
            d[rows, safe_t] -= 1.0
            d *= mask[:, None] * (float(g) / count)
            _accumulate(logits, d)

    return _node(out_value, (logits,), bw)


def backward(root: Tensor) -> None:
    """Populate .grad on every requires_grad tensor reachable from `root`."""
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    root.grad = np.ones_like(root.value)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

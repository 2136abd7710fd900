"""Reverse-mode autodiff over dense float64 numpy arrays.

Deliberately small: only the primitives the point-set encoders need.
Tensors are graph nodes; calling backward() on a scalar loss walks the
graph in reverse topological order and accumulates exact gradients
into every reachable tensor with requires_grad set.

Broadcasting is restricted to the cases the layers use (bias over the
last axis, scalars); anything else is a shape error by design.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _needs_grad(*tensors: Tensor) -> bool:
    return any(t.requires_grad or t._parents for t in tensors)


def _result(data, parents, backward, track: bool) -> Tensor:
    if track:
        return Tensor(data, _parents=parents, _backward=backward)
    return Tensor(data)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; b may also be a (C,) bias against a (..., C) tensor."""
    if a.shape != b.shape and not (b.data.ndim == 1 and a.shape[-1:] == b.shape):
        raise ShapeError(f"add shapes {a.shape} vs {b.shape}")
    track = _needs_grad(a, b)

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(g)
        if b.requires_grad or b._parents:
            if b.shape == a.shape:
                b._accumulate(g)
            else:
                b._accumulate(g.reshape(-1, g.shape[-1]).sum(axis=0))

    return _result(a.data + b.data, (a, b), backward, track)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"sub shapes {a.shape} vs {b.shape}")
    track = _needs_grad(a, b)

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(g)
        if b.requires_grad or b._parents:
            b._accumulate(-g)

    return _result(a.data - b.data, (a, b), backward, track)


def mul(a: Tensor, b: Tensor | float) -> Tensor:
    if isinstance(b, (int, float)):
        scalar = float(b)
        track = _needs_grad(a)

        def backward_s(g):
            if a.requires_grad or a._parents:
                a._accumulate(g * scalar)

        return _result(a.data * scalar, (a,), backward_s, track)
    if a.shape != b.shape:
        raise ShapeError(f"mul shapes {a.shape} vs {b.shape}")
    track = _needs_grad(a, b)

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(g * b.data)
        if b.requires_grad or b._parents:
            b._accumulate(g * a.data)

    return _result(a.data * b.data, (a, b), backward, track)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a (..., n, k) @ b, with b either (k, m) weights or batched like a."""
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    if b.data.ndim not in (2, a.data.ndim):
        raise ShapeError(f"matmul rhs must be 2-D or match lhs rank: {a.shape} x {b.shape}")
    if b.data.ndim == a.data.ndim and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul batch dims differ: {a.shape} x {b.shape}")
    track = _needs_grad(a, b)
    k = a.shape[-1]
    m = b.shape[-1]
    # Against 2-D weights, collapse leading axes into one large GEMM instead of
    # letting numpy loop thousands of tiny batched matmuls.
    if b.data.ndim == 2:
        out = (a.data.reshape(-1, k) @ b.data).reshape(a.shape[:-1] + (m,))
    else:
        out = np.matmul(a.data, b.data)

    def backward(g):
        if a.requires_grad or a._parents:
            if b.data.ndim == 2:
                a._accumulate((g.reshape(-1, m) @ b.data.T).reshape(a.shape))
            else:
                a._accumulate(np.matmul(g, np.swapaxes(b.data, -1, -2)))
        if b.requires_grad or b._parents:
            if b.data.ndim == 2:
                b._accumulate(a.data.reshape(-1, k).T @ g.reshape(-1, m))
            else:
                b._accumulate(np.matmul(np.swapaxes(a.data, -1, -2), g))

    return _result(out, (a, b), backward, track)


def relu(a: Tensor) -> Tensor:
    track = _needs_grad(a)
    mask = a.data > 0

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(g * mask)

    return _result(np.where(mask, a.data, 0.0), (a,), backward, track)


def max_reduce(a: Tensor, axis: int) -> Tensor:
    """Max over one axis (the set/pooling dimension); ties route the gradient
    to the first maximal element."""
    track = _needs_grad(a)
    arg = np.argmax(a.data, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(arg, axis), axis=axis).squeeze(axis)

    def backward(g):
        if a.requires_grad or a._parents:
            full = np.zeros_like(a.data)
            np.put_along_axis(full, np.expand_dims(arg, axis), np.expand_dims(g, axis), axis=axis)
            a._accumulate(full)

    return _result(out, (a,), backward, track)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    track = _needs_grad(*tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        parts = np.split(g, splits, axis=axis)
        for t, part in zip(tensors, parts):
            if t.requires_grad or t._parents:
                t._accumulate(part)

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward, track)


def gather(a: Tensor, index: np.ndarray) -> Tensor:
    """Batch point gather: a (B, N, C) indexed by integer (B, ...) -> (B, ..., C)."""
    if a.data.ndim != 3:
        raise ShapeError(f"gather expects (B, N, C), got {a.shape}")
    index = np.asarray(index)
    if index.ndim < 2 or index.shape[0] != a.shape[0]:
        raise ShapeError(f"gather index batch mismatch: {a.shape} vs {index.shape}")
    b_idx = np.arange(a.shape[0]).reshape((-1,) + (1,) * (index.ndim - 1))
    track = _needs_grad(a)

    def backward(g):
        if a.requires_grad or a._parents:
            full = np.zeros_like(a.data)
            np.add.at(full, (b_idx, index), g)
            a._accumulate(full)

    return _result(a.data[b_idx, index], (a,), backward, track)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    track = _needs_grad(a)
    old = a.shape

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(g.reshape(old))

    return _result(a.data.reshape(shape), (a,), backward, track)


def mean_all(a: Tensor) -> Tensor:
    track = _needs_grad(a)
    n = a.data.size

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(np.full_like(a.data, float(g) / n))

    return _result(np.mean(a.data), (a,), backward, track)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """Channel-last batch normalization over all leading axes.

    In training mode batch statistics normalize the input and the running
    buffers are updated in place (biased variance, momentum-weighted).
    In eval mode the frozen buffers make this a per-channel affine map.
    """
    if gamma.shape != x.shape[-1:] or beta.shape != x.shape[-1:]:
        raise ShapeError(f"batch_norm affine shapes {gamma.shape}/{beta.shape} vs input {x.shape}")
    C = x.data.shape[-1]
    m = x.data.size // C
    flat = x.data.reshape(m, C)
    if training:
        mu = flat.mean(axis=0)
        diff = flat - mu
        var = np.einsum("mc,mc->c", diff, diff) / m
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mu, var = running_mean, running_var
        diff = flat - mu
    ivar = 1.0 / np.sqrt(var + eps)
    out = (diff * (gamma.data * ivar) + beta.data).reshape(x.data.shape)
    track = _needs_grad(x, gamma, beta)

    def backward(g):
        gf = g.reshape(m, C)
        if gamma.requires_grad or gamma._parents:
            gamma._accumulate(np.einsum("mc,mc->c", gf, diff) * ivar)
        if beta.requires_grad or beta._parents:
            beta._accumulate(gf.sum(axis=0))
        if x.requires_grad or x._parents:
            gi = gamma.data * ivar
            if training:
                s1 = gf.sum(axis=0)
                s2 = np.einsum("mc,mc->c", gf, diff)
                dx = gi * gf - (gi / m) * s1 - diff * (gi * ivar * ivar * s2 / m)
            else:
                dx = gf * gi
            x._accumulate(dx.reshape(x.data.shape))

    return _result(out, (x, gamma, beta), backward, track)

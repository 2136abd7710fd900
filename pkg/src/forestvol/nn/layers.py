"""Parameter containers and the layer set shared by all encoders."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, add, batch_norm, matmul, relu


class Module:
    """Minimal parameter registry; submodules are discovered by attribute walk."""

    def named_parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        self._collect(out, prefix="")
        return out

    def _collect(self, out: dict[str, Tensor], prefix: str) -> None:
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[key] = value
            elif isinstance(value, Module):
                value._collect(out, prefix=key + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        item._collect(out, prefix=f"{key}.{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        out[f"{key}.{i}"] = item

    def named_buffers(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        self._collect_buffers(out, prefix="")
        return out

    def _collect_buffers(self, out: dict[str, np.ndarray], prefix: str) -> None:
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, np.ndarray):
                out[key] = value
            elif isinstance(value, Module):
                value._collect_buffers(out, prefix=key + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        item._collect_buffers(out, prefix=f"{key}.{i}.")

    def zero_grad(self) -> None:
        for p in self.named_parameters().values():
            p.grad = None


class Dense(Module):
    """Affine map on the last axis; with 3-D input this is the shared
    per-point 1x1 convolution."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.weight = Tensor(
            rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(in_dim, out_dim)),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.weight), self.bias)


class BatchNorm(Module):
    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5):
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            training=training, momentum=self.momentum, eps=self.eps,
        )


class SharedMLP(Module):
    """Stack of Dense -> BatchNorm -> ReLU applied along the last axis."""

    def __init__(self, dims: tuple[int, ...], rng: np.random.Generator,
                 batch_norm: bool = True):
        self.layers = [Dense(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]
        self.norms = [BatchNorm(dims[i + 1]) for i in range(len(dims) - 1)] if batch_norm else []

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        for i, dense in enumerate(self.layers):
            x = dense(x)
            if self.norms:
                x = self.norms[i](x, training)
            x = relu(x)
        return x


class Head(Module):
    """Regression head: hidden ReLU layers then a linear scalar output."""

    def __init__(self, dims: tuple[int, ...], rng: np.random.Generator):
        if dims[-1] != 1:
            raise ValueError(f"head must end in a scalar output, got dims {dims}")
        self.hidden = [Dense(dims[i], dims[i + 1], rng) for i in range(len(dims) - 2)]
        self.out = Dense(dims[-2], 1, rng)

    def __call__(self, x: Tensor) -> Tensor:
        for dense in self.hidden:
            x = relu(dense(x))
        return self.out(x)

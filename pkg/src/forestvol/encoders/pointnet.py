"""PointNet regression encoder: shared MLPs, global max pool, scalar head.

The input 3x3 transform network is initialized at identity (final layer
zero) and can be disabled; the feature-space transform of the original
design is intentionally omitted for the regression setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import Dense, Head, Module, SharedMLP, Tensor, add, matmul, max_reduce, relu, reshape
from .common import EncoderInputError, canonicalize


@dataclass(frozen=True)
class PointNetConfig:
    n_points: int = 128
    t_net_enabled: bool = True
    tnet_mlp: tuple[int, ...] = (16, 32)
    tnet_hidden: int = 32
    mlp1: tuple[int, ...] = (16, 16)
    mlp2: tuple[int, ...] = (32, 128)
    head: tuple[int, ...] = (64, 32)

    def descriptor(self) -> dict:
        return {"architecture": "pointnet", **{k: list(v) if isinstance(v, tuple) else v
                                               for k, v in self.__dict__.items()}}

    @staticmethod
    def from_descriptor(desc: dict) -> "PointNetConfig":
        fields_ = {k: tuple(v) if isinstance(v, list) else v
                   for k, v in desc.items() if k != "architecture"}
        return PointNetConfig(**fields_)


class TNet(Module):
    """Learned 3x3 input transform; outputs identity at initialization."""

    def __init__(self, cfg: PointNetConfig, rng: np.random.Generator):
        self.mlp = SharedMLP((3,) + cfg.tnet_mlp, rng)
        self.fc = Dense(cfg.tnet_mlp[-1], cfg.tnet_hidden, rng)
        self.out = Dense(cfg.tnet_hidden, 9, rng)
        self.out.weight.data[...] = 0.0
        self.out.bias.data[...] = np.eye(3).ravel()

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        h = self.mlp(x, training)
        pooled = max_reduce(h, axis=1)
        h = relu(self.fc(pooled))
        t = self.out(h)
        return reshape(t, (x.shape[0], 3, 3))


class PointNet(Module):
    def __init__(self, cfg: PointNetConfig, seed: int):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 11)))
        self.cfg = cfg
        self.tnet = TNet(cfg, rng) if cfg.t_net_enabled else None
        self.mlp1 = SharedMLP((3,) + cfg.mlp1, rng)
        self.mlp2 = SharedMLP((cfg.mlp1[-1],) + cfg.mlp2, rng)
        self.head = Head((cfg.mlp2[-1],) + cfg.head + (1,), rng)

    def descriptor(self) -> dict:
        return self.cfg.descriptor()

    def forward(self, points: np.ndarray, training: bool = False) -> Tensor:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 3 or points.shape[1] != self.cfg.n_points or points.shape[2] != 3:
            raise EncoderInputError(
                f"expected (B, {self.cfg.n_points}, 3) points, got {points.shape}"
            )
        x = Tensor(canonicalize(points))
        if self.tnet is not None:
            t = self.tnet(x, training)
            x = matmul(x, t)
        h = self.mlp1(x, training)
        h = self.mlp2(h, training)
        pooled = max_reduce(h, axis=1)       # (B, C) global set feature
        out = self.head(pooled)              # (B, 1)
        return reshape(out, (points.shape[0],))

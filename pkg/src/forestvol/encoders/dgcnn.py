"""DGCNN regression encoder: dynamic-graph edge convolutions.

Each block rebuilds the kNN graph in the current feature space and
max-pools an edge MLP applied to concat(h_i, h_j - h_i) over every
point's neighborhood. Block outputs are concatenated, lifted by a
shared affine, globally max-pooled and regressed to a scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Head, Module, SharedMLP, Tensor, concat, gather, max_reduce, reshape, sub
from .common import EncoderInputError, canonicalize, knn_indices


@dataclass(frozen=True)
class DGCNNConfig:
    n_points: int = 128
    k: int = 20
    blocks: tuple[tuple[int, ...], ...] = ((16,), (16,), (32,))
    aggregate: int = 64
    head: tuple[int, ...] = (32,)

    def descriptor(self) -> dict:
        return {
            "architecture": "dgcnn",
            "n_points": self.n_points,
            "k": self.k,
            "blocks": [list(b) for b in self.blocks],
            "aggregate": self.aggregate,
            "head": list(self.head),
        }

    @staticmethod
    def from_descriptor(desc: dict) -> "DGCNNConfig":
        return DGCNNConfig(
            n_points=desc["n_points"], k=desc["k"],
            blocks=tuple(tuple(b) for b in desc["blocks"]),
            aggregate=desc["aggregate"], head=tuple(desc["head"]),
        )


class EdgeConv(Module):
    def __init__(self, in_dim: int, widths: tuple[int, ...], rng: np.random.Generator):
        self.mlp = SharedMLP((2 * in_dim,) + widths, rng)
        self.out_dim = widths[-1]

    def __call__(self, h: Tensor, k: int, training: bool) -> Tensor:
        B, N, _ = h.shape
        idx = knn_indices(h.data, k)                       # graph from current features
        neighbors = gather(h, idx)                         # (B, N, k, C)
        self_idx = np.broadcast_to(np.arange(N)[None, :, None], (B, N, k))
        centers = gather(h, np.ascontiguousarray(self_idx))
        edge = concat([centers, sub(neighbors, centers)], axis=-1)
        out = self.mlp(edge, training)                     # (B, N, k, C')
        return max_reduce(out, axis=2)                     # (B, N, C')


class DGCNN(Module):
    def __init__(self, cfg: DGCNNConfig, seed: int):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 33)))
        self.cfg = cfg
        self.blocks = []
        in_dim = 3
        for widths in cfg.blocks:
            block = EdgeConv(in_dim, widths, rng)
            self.blocks.append(block)
            in_dim = block.out_dim
        total = sum(b.out_dim for b in self.blocks)
        self.aggregate = SharedMLP((total, cfg.aggregate), rng)
        self.head = Head((cfg.aggregate,) + cfg.head + (1,), rng)

    def descriptor(self) -> dict:
        return self.cfg.descriptor()

    def forward(self, points: np.ndarray, training: bool = False) -> Tensor:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 3 or points.shape[1] != self.cfg.n_points or points.shape[2] != 3:
            raise EncoderInputError(
                f"expected (B, {self.cfg.n_points}, 3) points, got {points.shape}"
            )
        if self.cfg.k >= points.shape[1]:
            raise EncoderInputError(
                f"k={self.cfg.k} must be smaller than the point count {points.shape[1]}"
            )
        h = Tensor(canonicalize(points))
        skips = []
        for block in self.blocks:
            h = block(h, self.cfg.k, training)
            skips.append(h)
        merged = concat(skips, axis=-1) if len(skips) > 1 else skips[0]
        lifted = self.aggregate(merged, training)
        pooled = max_reduce(lifted, axis=1)
        out = self.head(pooled)
        return reshape(out, (points.shape[0],))

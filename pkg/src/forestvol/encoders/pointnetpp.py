"""PointNet++ (single-scale grouping) regression encoder.

Stacked set-abstraction levels: FPS centroids, ball-query grouping with
relative coordinates, a local shared MLP and max pooling per group,
followed by a group-all level and the scalar head. Centroid selection
and grouping run on raw coordinates outside the autodiff graph; only
feature tensors carry gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Head, Module, SharedMLP, Tensor, concat, gather, max_reduce
from .common import EncoderInputError, ball_group, canonicalize, fps_centroids


@dataclass(frozen=True)
class SetAbstractionSpec:
    npoint: int
    radius: float       # m
    nsample: int
    mlp: tuple[int, ...]


@dataclass(frozen=True)
class PointNetPPConfig:
    n_points: int = 128
    levels: tuple[SetAbstractionSpec, ...] = (
        SetAbstractionSpec(npoint=32, radius=3.0, nsample=16, mlp=(16, 32)),
        SetAbstractionSpec(npoint=8, radius=8.0, nsample=8, mlp=(32, 64)),
    )
    global_mlp: tuple[int, ...] = (128,)
    head: tuple[int, ...] = (64,)

    def __post_init__(self):
        counts = [lv.npoint for lv in self.levels]
        if any(b >= a for a, b in zip(counts, counts[1:])):
            raise ValueError(f"centroid counts must strictly decrease, got {counts}")

    def descriptor(self) -> dict:
        return {
            "architecture": "pointnetpp",
            "n_points": self.n_points,
            "levels": [
                {"npoint": lv.npoint, "radius": lv.radius,
                 "nsample": lv.nsample, "mlp": list(lv.mlp)}
                for lv in self.levels
            ],
            "global_mlp": list(self.global_mlp),
            "head": list(self.head),
        }

    @staticmethod
    def from_descriptor(desc: dict) -> "PointNetPPConfig":
        levels = tuple(
            SetAbstractionSpec(lv["npoint"], lv["radius"], lv["nsample"], tuple(lv["mlp"]))
            for lv in desc["levels"]
        )
        return PointNetPPConfig(
            n_points=desc["n_points"], levels=levels,
            global_mlp=tuple(desc["global_mlp"]), head=tuple(desc["head"]),
        )


class SetAbstraction(Module):
    def __init__(self, spec: SetAbstractionSpec, in_dim: int, rng: np.random.Generator):
        self.spec = spec
        self.mlp = SharedMLP((in_dim + 3,) + spec.mlp, rng)
        self.out_dim = spec.mlp[-1]

    def __call__(
        self, xyz: np.ndarray, feats: Tensor | None, training: bool
    ) -> tuple[np.ndarray, Tensor]:
        spec = self.spec
        rows = np.arange(xyz.shape[0])[:, None]
        centroid_idx = fps_centroids(xyz, spec.npoint)
        new_xyz = xyz[rows, centroid_idx]                        # (B, S, 3)
        group_idx = ball_group(xyz, centroid_idx, spec.radius, spec.nsample)

        grouped_xyz = xyz[rows[:, :, None], group_idx]           # (B, S, K, 3)
        rel = grouped_xyz - new_xyz[:, :, None, :]
        rel_t = Tensor(rel)
        if feats is None:
            grouped = rel_t
        else:
            grouped = concat([rel_t, gather(feats, group_idx)], axis=-1)
        local = self.mlp(grouped, training)                      # (B, S, K, C)
        pooled = max_reduce(local, axis=2)                       # (B, S, C)
        return new_xyz, pooled


class PointNetPP(Module):
    def __init__(self, cfg: PointNetPPConfig, seed: int):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 22)))
        self.cfg = cfg
        self.levels = []
        in_dim = 0
        for spec in cfg.levels:
            level = SetAbstraction(spec, in_dim, rng)
            self.levels.append(level)
            in_dim = level.out_dim
        self.global_mlp = SharedMLP((in_dim + 3,) + cfg.global_mlp, rng)
        self.head = Head((cfg.global_mlp[-1],) + cfg.head + (1,), rng)

    def descriptor(self) -> dict:
        return self.cfg.descriptor()

    def forward(self, points: np.ndarray, training: bool = False) -> Tensor:
        from ..nn import reshape

        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 3 or points.shape[1] != self.cfg.n_points or points.shape[2] != 3:
            raise EncoderInputError(
                f"expected (B, {self.cfg.n_points}, 3) points, got {points.shape}"
            )
        xyz = canonicalize(points)
        feats: Tensor | None = None
        for level in self.levels:
            xyz, feats = level(xyz, feats, training)
        # Group-all: absolute coordinates rejoin the features so the global
        # stage sees plot extent directly.
        full = concat([Tensor(xyz), feats], axis=-1)             # (B, S, C+3)
        h = self.global_mlp(full, training)
        pooled = max_reduce(h, axis=1)
        out = self.head(pooled)
        return reshape(out, (points.shape[0],))

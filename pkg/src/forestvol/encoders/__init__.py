"""Point-set regression encoders and the architecture registry."""

from __future__ import annotations

import numpy as np

from .common import EncoderInputError, canonicalize
from .dgcnn import DGCNN, DGCNNConfig
from .pointnet import PointNet, PointNetConfig
from .pointnetpp import PointNetPP, PointNetPPConfig, SetAbstractionSpec

ARCHITECTURES = ("pointnet", "pointnetpp", "dgcnn")


def default_config(architecture: str, n_points: int = 128):
    if architecture == "pointnet":
        return PointNetConfig(n_points=n_points)
    if architecture == "pointnetpp":
        return PointNetPPConfig(n_points=n_points)
    if architecture == "dgcnn":
        return DGCNNConfig(n_points=n_points)
    raise ValueError(f"unknown architecture {architecture!r}; choose from {ARCHITECTURES}")


def build_encoder(config, seed: int):
    if isinstance(config, PointNetConfig):
        return PointNet(config, seed)
    if isinstance(config, PointNetPPConfig):
        return PointNetPP(config, seed)
    if isinstance(config, DGCNNConfig):
        return DGCNN(config, seed)
    raise ValueError(f"unknown encoder config type {type(config).__name__}")


def build_from_descriptor(desc: dict, seed: int = 0):
    arch = desc.get("architecture")
    if arch == "pointnet":
        return PointNet(PointNetConfig.from_descriptor(desc), seed)
    if arch == "pointnetpp":
        return PointNetPP(PointNetPPConfig.from_descriptor(desc), seed)
    if arch == "dgcnn":
        return DGCNN(DGCNNConfig.from_descriptor(desc), seed)
    raise ValueError(f"unknown architecture {arch!r} in descriptor")


def describe(model) -> str:
    """Human-readable layer table: one line per parameter tensor."""
    rows = [f"{'parameter':40s} {'shape':>14s} {'count':>8s}"]
    total = 0
    for name, p in sorted(model.named_parameters().items()):
        count = int(np.prod(p.data.shape))
        total += count
        rows.append(f"{name:40s} {str(tuple(p.data.shape)):>14s} {count:>8d}")
    rows.append(f"{'total':40s} {'':>14s} {total:>8d}")
    return "\n".join(rows)


__all__ = [
    "ARCHITECTURES",
    "DGCNN",
    "DGCNNConfig",
    "EncoderInputError",
    "PointNet",
    "PointNetConfig",
    "PointNetPP",
    "PointNetPPConfig",
    "SetAbstractionSpec",
    "build_encoder",
    "build_from_descriptor",
    "canonicalize",
    "default_config",
    "describe",
]

"""Shared encoder machinery: canonicalization, kNN, FPS and ball grouping.

Inputs are canonicalized by translating the xy centroid to the origin
and the lowest point to z=0 (no scaling: absolute size carries the
volume signal), then sorting points lexicographically by (x, y, z).
The sort makes every index-based tie rule canonical, so the encoders
are permutation invariant by construction.
"""

from __future__ import annotations

import numpy as np

from ..sampling import fps_indices_batch


class EncoderInputError(ValueError):
    pass


def canonicalize(points: np.ndarray) -> np.ndarray:
    """(B, N, 3) -> centered, floored, lexicographically ordered copy."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 3 or points.shape[2] != 3:
        raise EncoderInputError(f"expected (B, N, 3) points, got {points.shape}")
    out = points.copy()
    out[:, :, 0] -= out[:, :, 0].mean(axis=1, keepdims=True)
    out[:, :, 1] -= out[:, :, 1].mean(axis=1, keepdims=True)
    out[:, :, 2] -= out[:, :, 2].min(axis=1, keepdims=True)
    for b in range(len(out)):
        order = np.lexsort((out[b, :, 2], out[b, :, 1], out[b, :, 0]))
        out[b] = out[b, order]
    return out


def pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distances (B, S, N) between row sets a (B, S, C) and b (B, N, C)."""
    cross = np.matmul(a, np.swapaxes(b, 1, 2))
    aa = np.einsum("bsc,bsc->bs", a, a)[:, :, None]
    bb = np.einsum("bnc,bnc->bn", b, b)[:, None, :]
    return np.maximum(aa + bb - 2.0 * cross, 0.0)


def knn_indices(features: np.ndarray, k: int) -> np.ndarray:
    """Indices (B, N, k) of each point's k nearest neighbors, self excluded.

    Ties break to the lowest index (stable sort), which is the canonical
    (x, y, z) order after input canonicalization.
    """
    B, N, _ = features.shape
    if k >= N:
        raise EncoderInputError(f"k={k} must be smaller than the point count {N}")
    d = pairwise_sqdist(features, features)
    idx = np.arange(N)
    d[:, idx, idx] = np.inf
    order = np.argsort(d, axis=2, kind="stable")
    return order[:, :, :k]


def ball_group(
    xyz: np.ndarray, centroid_idx: np.ndarray, radius: float, nsample: int
) -> np.ndarray:
    """Indices (B, S, nsample) of points within radius of each centroid.

    In-radius points are taken nearest-first; short groups pad by repeating
    the nearest member. A centroid is one of the points, so its own index
    (distance zero) guarantees the group is never empty.
    """
    B = xyz.shape[0]
    rows = np.arange(B)[:, None]
    centers = xyz[rows, centroid_idx]                       # (B, S, 3)
    d = pairwise_sqdist(centers, xyz)                       # (B, S, N)
    d = np.where(d <= radius * radius, d, np.inf)
    order = np.argsort(d, axis=2, kind="stable")[:, :, :nsample]
    d_sorted = np.take_along_axis(d, order, axis=2)
    padded = np.where(np.isinf(d_sorted), order[:, :, :1], order)
    return padded


def fps_centroids(xyz: np.ndarray, npoint: int) -> np.ndarray:
    """FPS centroid indices (B, npoint), seeded at the canonical first point."""
    B, N, _ = xyz.shape
    if npoint > N:
        raise EncoderInputError(f"cannot pick {npoint} centroids from {N} points")
    return fps_indices_batch(xyz, npoint, np.zeros(B, dtype=np.int64))

"""Point-cloud downsampling (random / farthest-point), jitter and tiling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, PointCloudError


def random_sample(cloud: PointCloud, n: int, seed: int) -> PointCloud:
    """Uniform sample of n distinct points, order of draw preserved."""
    if n > len(cloud):
        raise PointCloudError(f"cannot sample {n} from {len(cloud)} points")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(cloud), size=n, replace=False)
    return cloud.select(idx)


def fps_indices(
    xyz: np.ndarray, n: int, start_index: int
) -> np.ndarray:
    """Greedy max-min selection over one cloud; ties break to the lowest index."""
    n_points = len(xyz)
    selected = np.empty(n, dtype=np.int64)
    selected[0] = start_index
    min_d2 = np.sum((xyz - xyz[start_index]) ** 2, axis=1)
    for i in range(1, n):
        nxt = int(np.argmax(min_d2))  # argmax returns the first (lowest) index on ties
        selected[i] = nxt
        d2 = np.sum((xyz - xyz[nxt]) ** 2, axis=1)
        np.minimum(min_d2, d2, out=min_d2)
    return selected


def farthest_point_sample(
    cloud: PointCloud, n: int, seed: int, start_index: int | None = None
) -> PointCloud:
    """FPS downsample; the initial point is seed-chosen unless pinned."""
    if n > len(cloud):
        raise PointCloudError(f"cannot sample {n} from {len(cloud)} points")
    if n == 0:
        return cloud.select(np.empty(0, dtype=np.int64))
    if start_index is None:
        start_index = int(np.random.default_rng(seed).integers(0, len(cloud)))
    return cloud.select(fps_indices(cloud.xyz, n, start_index))


def fps_indices_batch(xyz: np.ndarray, n: int, start_index: np.ndarray) -> np.ndarray:
    """Vectorized FPS over a batch: xyz (B, N, 3) -> indices (B, n)."""
    B, N, _ = xyz.shape
    rows = np.arange(B)
    selected = np.empty((B, n), dtype=np.int64)
    selected[:, 0] = start_index
    diff = xyz - xyz[rows, start_index][:, None, :]
    min_d2 = np.einsum("bnk,bnk->bn", diff, diff)
    for i in range(1, n):
        nxt = np.argmax(min_d2, axis=1)
        selected[:, i] = nxt
        diff = xyz - xyz[rows, nxt][:, None, :]
        np.minimum(min_d2, np.einsum("bnk,bnk->bn", diff, diff), out=min_d2)
    return selected


def jitter(cloud: PointCloud, sigma: float, clip: float, seed: int) -> PointCloud:
    """Add per-coordinate Gaussian noise, clipped to [-clip, clip]."""
    if sigma < 0 or clip < 0:
        raise PointCloudError("sigma and clip must be >= 0")
    rng = np.random.default_rng(seed)
    noise = np.clip(rng.normal(0.0, sigma, size=cloud.xyz.shape), -clip, clip)
    return PointCloud(cloud.xyz + noise, cloud.return_number)


def jitter_array(xyz: np.ndarray, sigma: float, clip: float, rng: np.random.Generator) -> np.ndarray:
    """Array-level jitter for training batches (same noise model as `jitter`)."""
    return xyz + np.clip(rng.normal(0.0, sigma, size=xyz.shape), -clip, clip)


@dataclass(frozen=True)
class Tile:
    index: tuple[int, int]
    cloud: PointCloud
    area_m2: float


@dataclass(frozen=True)
class TilingResult:
    tiles: list[Tile]
    dropped: list[tuple[tuple[int, int], int]]  # (index, point count) below min_points
    tile_edge: float


def tile(cloud: PointCloud, tile_edge: float, min_points: int = 256) -> TilingResult:
    """Partition the xy footprint into an axis-aligned grid of square tiles.

    Intervals are half-open with the far boundary closed (a point exactly on
    the max edge folds into the last tile), so every point lands in exactly
    one tile. Tile area is the full grid-cell area tile_edge^2.
    """
    if tile_edge <= 0:
        raise PointCloudError(f"tile_edge must be positive, got {tile_edge}")
    if len(cloud) == 0:
        return TilingResult([], [], tile_edge)
    xy = cloud.xyz[:, :2]
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    ncols = max(1, int(np.ceil((hi[0] - lo[0]) / tile_edge - 1e-12)))
    nrows = max(1, int(np.ceil((hi[1] - lo[1]) / tile_edge - 1e-12)))
    ix = np.minimum((np.floor((xy[:, 0] - lo[0]) / tile_edge)).astype(np.int64), ncols - 1)
    iy = np.minimum((np.floor((xy[:, 1] - lo[1]) / tile_edge)).astype(np.int64), nrows - 1)
    flat = ix * nrows + iy

    tiles: list[Tile] = []
    dropped: list[tuple[tuple[int, int], int]] = []
    area = float(tile_edge) ** 2
    for key in np.unique(flat):
        mask = flat == key
        count = int(mask.sum())
        index = (int(key // nrows), int(key % nrows))
        if count < min_points:
            dropped.append((index, count))
        else:
            tiles.append(Tile(index=index, cloud=cloud.select(np.nonzero(mask)[0]), area_m2=area))
    return TilingResult(tiles=tiles, dropped=dropped, tile_edge=float(tile_edge))

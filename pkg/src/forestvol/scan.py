"""Simplified ULS scan simulation: pulse planning and multi-return ray casting.

A virtual scanner flies parallel lines above the plot, sweeping an
infinitesimal ray across-track as a triangular wave. Every ray is
intersected with all scene triangles (wood and leaf surfaces alike,
no backface culling) plus an optional ground plane; hits are range
sorted, gated by a minimum return separation and truncated to the
scanner's return capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .mesh import TriangleMesh

RAY_EPS = 1e-9
GROUND_MARGIN = 5.0  # m beyond the footprint covered by the ground plane
MAX_PAIRS_PER_CHUNK = 2_000_000  # ray x triangle pairs held in memory at once


class ScanError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScannerConfig:
    """Acquisition settings; defaults mirror the simulated-survey values."""

    altitude: float = 35.0            # m above ground
    flight_speed: float = 2.0         # m/s
    pulse_rate: float = 200_000.0     # Hz (downscale at desk scale)
    scan_frequency: float = 80.0      # sweep Hz
    max_returns: int = 5
    scan_angle: float = 180.0         # degrees, full swath
    min_return_separation: float = 0.5  # m range gate between returns
    flight_line_spacing: float = 10.0   # m between adjacent lines

    def __post_init__(self):
        positive = (
            self.altitude, self.flight_speed, self.pulse_rate,
            self.scan_frequency, self.flight_line_spacing,
        )
        if any(v <= 0 for v in positive):
            raise ValueError("altitude, speed, rates and line spacing must be positive")
        if not 0.0 <= self.scan_angle <= 360.0:
            raise ValueError(f"scan_angle must be in [0, 360], got {self.scan_angle}")
        if self.max_returns < 1:
            raise ValueError("max_returns must be >= 1")
        if self.min_return_separation < 0:
            raise ValueError("min_return_separation must be >= 0")


@dataclass(frozen=True)
class Rays:
    origins: np.ndarray      # (P, 3)
    directions: np.ndarray   # (P, 3), unit length
    line_index: np.ndarray   # (P,)
    pulse_id: np.ndarray     # (P,), globally unique, canonical order

    def __len__(self) -> int:
        return len(self.origins)


@dataclass(frozen=True)
class ScanResult:
    points: PointCloud       # return_number set per point
    pulse_id: np.ndarray     # (N,) emitting pulse of each point
    pulse_count: int


def sweep_angle(t: np.ndarray, config: ScannerConfig) -> np.ndarray:
    """Across-track deflection (degrees) at time t: triangular wave, amplitude
    scan_angle/2, period 1/scan_frequency, starting at the negative extreme."""
    amplitude = config.scan_angle / 2.0
    u = np.mod(np.asarray(t, dtype=np.float64) * config.scan_frequency, 1.0)
    s = 2.0 * u
    return amplitude * (2.0 * np.minimum(s, 2.0 - s) - 1.0)


def plan_pulses(config: ScannerConfig, footprint: tuple[float, float, float, float]) -> Rays:
    """Pulse rays for parallel flight lines over (x_min, x_max, y_min, y_max).

    Lines run along +y at z=altitude, spaced flight_line_spacing apart and
    centered on the footprint; pulses tick at pulse_rate for the time needed
    to traverse the footprint's y extent at flight_speed.
    """
    x_min, x_max, y_min, y_max = footprint
    if x_max <= x_min or y_max <= y_min:
        raise ValueError(f"footprint must be non-empty, got {footprint}")
    width = x_max - x_min
    n_lines = max(1, int(np.ceil(width / config.flight_line_spacing)))
    center = 0.5 * (x_min + x_max)
    line_x = center + (np.arange(n_lines) - (n_lines - 1) / 2.0) * config.flight_line_spacing

    duration = (y_max - y_min) / config.flight_speed
    per_line = max(1, int(np.floor(duration * config.pulse_rate - 1e-9)) + 1)
    t = np.arange(per_line) / config.pulse_rate
    theta = np.deg2rad(sweep_angle(t, config))

    origins = np.empty((n_lines * per_line, 3))
    directions = np.empty_like(origins)
    dir_one = np.stack([np.sin(theta), np.zeros_like(theta), -np.cos(theta)], axis=1)
    for i, lx in enumerate(line_x):
        sl = slice(i * per_line, (i + 1) * per_line)
        origins[sl, 0] = lx
        origins[sl, 1] = y_min + config.flight_speed * t
        origins[sl, 2] = config.altitude
        directions[sl] = dir_one
    line_index = np.repeat(np.arange(n_lines), per_line)
    pulse_id = np.arange(n_lines * per_line, dtype=np.int64)
    return Rays(origins, directions, line_index, pulse_id)


def _moller_trumbore(
    origins: np.ndarray, directions: np.ndarray, triangles: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (ray, triangle) intersections with t > eps, both faces hittable.

    Returns (ray_idx, tri_idx, t). Inputs are (R, 3), (R, 3), (T, 3, 3).
    """
    v0 = triangles[:, 0]
    e1 = triangles[:, 1] - v0
    e2 = triangles[:, 2] - v0
    R = len(origins)
    T = len(triangles)
    if R == 0 or T == 0:
        empty = np.empty(0)
        return empty.astype(np.int64), empty.astype(np.int64), empty

    h = np.cross(directions[:, None, :], e2[None, :, :])        # (R, T, 3)
    a = np.einsum("tk,rtk->rt", e1, h)
    valid = np.abs(a) > RAY_EPS
    inv_a = np.where(valid, 1.0 / np.where(valid, a, 1.0), 0.0)
    s = origins[:, None, :] - v0[None, :, :]
    u = inv_a * np.einsum("rtk,rtk->rt", s, h)
    q = np.cross(s, e1[None, :, :])
    v = inv_a * np.einsum("rk,rtk->rt", directions, q)
    t = inv_a * np.einsum("tk,rtk->rt", e2, q)
    hit = valid & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > RAY_EPS)
    ray_idx, tri_idx = np.nonzero(hit)
    return ray_idx, tri_idx, t[ray_idx, tri_idx]


def _aabb_hits(origins, directions, lo, hi) -> np.ndarray:
    """Slab test: which rays intersect the axis-aligned box [lo, hi]."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / directions
        t0 = (lo[None, :] - origins) * inv
        t1 = (hi[None, :] - origins) * inv
    # Parallel-axis rays: inside the slab -> +/-inf bounds, outside -> NaN.
    tmin = np.nanmax(np.minimum(t0, t1), axis=1)
    tmax = np.nanmin(np.maximum(t0, t1), axis=1)
    inside = (origins >= lo[None, :]) & (origins <= hi[None, :])
    parallel_ok = (directions != 0) | inside
    return (tmax >= np.maximum(tmin, 0.0)) & parallel_ok.all(axis=1)


def cast_rays(
    rays: Rays,
    meshes: list[TriangleMesh],
    config: ScannerConfig,
    ground_footprint: tuple[float, float, float, float] | None = None,
) -> ScanResult:
    """Intersect every ray with the scene, then range-gate per pulse."""
    origins, directions = rays.origins, rays.directions
    all_ray: list[np.ndarray] = []
    all_t: list[np.ndarray] = []

    for mesh in meshes:
        lo, hi = mesh.bounds()
        candidates = np.nonzero(_aabb_hits(origins, directions, lo, hi))[0]
        if candidates.size == 0:
            continue
        tris = mesh.triangles()
        chunk = max(1, MAX_PAIRS_PER_CHUNK // max(1, len(tris)))
        for start in range(0, len(candidates), chunk):
            sub = candidates[start:start + chunk]
            r_idx, _, t = _moller_trumbore(origins[sub], directions[sub], tris)
            all_ray.append(sub[r_idx])
            all_t.append(t)

    if ground_footprint is not None:
        x0, x1, y0, y1 = ground_footprint
        dz = directions[:, 2]
        downward = dz < -RAY_EPS
        t_g = np.where(downward, -origins[:, 2] / np.where(downward, dz, -1.0), np.inf)
        gx = origins[:, 0] + t_g * directions[:, 0]
        gy = origins[:, 1] + t_g * directions[:, 1]
        ok = (
            downward & (t_g > RAY_EPS)
            & (gx >= x0 - GROUND_MARGIN) & (gx <= x1 + GROUND_MARGIN)
            & (gy >= y0 - GROUND_MARGIN) & (gy <= y1 + GROUND_MARGIN)
        )
        idx = np.nonzero(ok)[0]
        all_ray.append(idx)
        all_t.append(t_g[idx])

    if not all_ray:
        raise ScanError("scan produced zero returns (no geometry and no ground plane)")
    ray_idx = np.concatenate(all_ray)
    t_all = np.concatenate(all_t)
    if ray_idx.size == 0:
        raise ScanError("scan produced zero returns")

    order = np.lexsort((t_all, ray_idx))
    ray_idx, t_all = ray_idx[order], t_all[order]

    keep = np.zeros(len(ray_idx), dtype=bool)
    return_no = np.zeros(len(ray_idx), dtype=np.uint8)
    starts = np.flatnonzero(np.r_[True, ray_idx[1:] != ray_idx[:-1]])
    ends = np.r_[starts[1:], len(ray_idx)]
    sep = config.min_return_separation
    for s, e in zip(starts, ends):
        last = -np.inf
        count = 0
        for j in range(s, e):
            if count >= config.max_returns:
                break
            if t_all[j] - last >= sep or count == 0:
                keep[j] = True
                count += 1
                return_no[j] = count
                last = t_all[j]

    ray_idx, t_all, return_no = ray_idx[keep], t_all[keep], return_no[keep]
    points = origins[ray_idx] + t_all[:, None] * directions[ray_idx]
    return ScanResult(
        points=PointCloud(points, return_no),
        pulse_id=rays.pulse_id[ray_idx],
        pulse_count=len(rays),
    )


def cast_pulse(
    origin, direction, meshes: list[TriangleMesh], config: ScannerConfig
) -> list[tuple[float, np.ndarray]]:
    """Returns of a single pulse as (range, point), range-gated and sorted."""
    origin = np.asarray(origin, dtype=np.float64).reshape(1, 3)
    direction = np.asarray(direction, dtype=np.float64).reshape(1, 3)
    norm = np.linalg.norm(direction)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("ray direction must be normalized")
    rays = Rays(origin, direction, np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))
    try:
        result = cast_rays(rays, meshes, config, ground_footprint=None)
    except ScanError:
        return []
    return [(float(np.linalg.norm(p - origin[0])), p) for p in result.points.xyz]


def scan_scene(
    meshes: list[TriangleMesh],
    footprint: tuple[float, float, float, float],
    config: ScannerConfig,
    ground: bool = True,
) -> ScanResult:
    rays = plan_pulses(config, footprint)
    return cast_rays(rays, meshes, config, ground_footprint=footprint if ground else None)


def scan_plot(plot, config: ScannerConfig, ground: bool = True) -> ScanResult:
    """Scan a ForestPlot over its rectangle footprint."""
    footprint = (0.0, plot.width, 0.0, plot.depth)
    return scan_scene(plot.scene_meshes(), footprint, config, ground=ground)

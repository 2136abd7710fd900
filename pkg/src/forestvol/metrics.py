"""Spatial characteristics of a downsampled plot cloud.

Area is the xy bounding-box area, volume adds the z extent, densities
are N over each, and average spacing is the mean distance to the
nearest distinct neighbor (KD-tree two-neighbor query, self ignored).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud, PointCloudError

METRICS_CSV_HEADER = ["plot_id", "area_m2", "volume_m3", "density_m2", "density_m3", "avg_spacing_m"]


@dataclass(frozen=True)
class SpatialMetrics:
    area: float           # m^2
    volume: float         # m^3
    density_area: float   # pts / m^2
    density_volume: float # pts / m^3
    avg_spacing: float    # m


def nearest_neighbor_distances(cloud: PointCloud) -> np.ndarray:
    """Distance from each point to its closest distinct neighbor."""
    tree = cKDTree(cloud.xyz)
    d, _ = tree.query(cloud.xyz, k=2)
    return d[:, 1]


def spatial_metrics(cloud: PointCloud) -> SpatialMetrics:
    if len(cloud) < 2:
        raise PointCloudError("spatial metrics need at least 2 points")
    lo = cloud.xyz.min(axis=0)
    hi = cloud.xyz.max(axis=0)
    extent = hi - lo
    for axis, name in enumerate("xyz"):
        if extent[axis] <= 0.0:
            raise PointCloudError(f"degenerate bounding box: zero extent along {name}")
    n = len(cloud)
    area = float(extent[0] * extent[1])
    volume = float(area * extent[2])
    spacing = float(nearest_neighbor_distances(cloud).mean())
    return SpatialMetrics(
        area=area,
        volume=volume,
        density_area=n / area,
        density_volume=n / volume,
        avg_spacing=spacing,
    )


def write_metrics_csv(path: str | Path, rows: list[tuple[str, SpatialMetrics]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_CSV_HEADER)
        for plot_id, m in rows:
            writer.writerow(
                [plot_id, repr(m.area), repr(m.volume), repr(m.density_area),
                 repr(m.density_volume), repr(m.avg_spacing)]
            )

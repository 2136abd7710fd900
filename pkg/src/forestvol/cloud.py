"""Point cloud container and the XYZ / binary-PLY interchange formats."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PointCloudError(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    """Ordered (N, 3) float64 points in meters, optional per-point return number.

    Order carries no meaning (consumers are permutation tolerant) but is
    preserved so that seeded pipelines stay reproducible.
    """

    xyz: np.ndarray
    return_number: np.ndarray | None = None

    def __post_init__(self):
        xyz = np.ascontiguousarray(self.xyz, dtype=np.float64)
        if xyz.ndim != 2 or xyz.shape[1] != 3:
            raise PointCloudError(f"xyz must be (N, 3), got {xyz.shape}")
        if not np.all(np.isfinite(xyz)):
            raise PointCloudError("non-finite coordinates")
        object.__setattr__(self, "xyz", xyz)
        if self.return_number is not None:
            rn = np.ascontiguousarray(self.return_number, dtype=np.uint8)
            if rn.shape != (len(xyz),):
                raise PointCloudError("return_number must be (N,)")
            object.__setattr__(self, "return_number", rn)

    def __len__(self) -> int:
        return len(self.xyz)

    def select(self, indices) -> "PointCloud":
        rn = None if self.return_number is None else self.return_number[indices]
        return PointCloud(self.xyz[indices], rn)

    def translated(self, offset) -> "PointCloud":
        return PointCloud(self.xyz + np.asarray(offset, dtype=np.float64), self.return_number)

    def rotated_z(self, degrees: float, center=(0.0, 0.0, 0.0)) -> "PointCloud":
        from .mesh import rotate_z

        c = np.asarray(center, dtype=np.float64)
        return PointCloud(rotate_z(self.xyz - c, degrees) + c, self.return_number)


# ---------------------------------------------------------------------------
# ASCII XYZ: `x y z [return_number]` per line, meters, LF endings
# ---------------------------------------------------------------------------


def save_xyz(cloud: PointCloud, path: str | Path, decimals: int = 6) -> None:
    n = len(cloud)
    lines = []
    xyz = np.round(cloud.xyz, decimals)
    if cloud.return_number is not None:
        for (x, y, z), r in zip(xyz.tolist(), cloud.return_number.tolist()):
            lines.append(f"{x:.{decimals}f} {y:.{decimals}f} {z:.{decimals}f} {r}")
    else:
        for x, y, z in xyz.tolist():
            lines.append(f"{x:.{decimals}f} {y:.{decimals}f} {z:.{decimals}f}")
    Path(path).write_text("\n".join(lines) + ("\n" if n else ""), encoding="utf-8", newline="\n")


def load_xyz(path: str | Path) -> PointCloud:
    xyz, returns = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) == 3:
            xyz.append([float(v) for v in parts])
        elif len(parts) == 4:
            xyz.append([float(v) for v in parts[:3]])
            returns.append(int(parts[3]))
        else:
            raise PointCloudError(f"{path}:{lineno}: expected 3 or 4 columns")
    if returns and len(returns) != len(xyz):
        raise PointCloudError(f"{path}: mixed 3- and 4-column rows")
    arr = np.array(xyz, dtype=np.float64).reshape(-1, 3)
    return PointCloud(arr, np.array(returns, dtype=np.uint8) if returns else None)


# ---------------------------------------------------------------------------
# Binary little-endian PLY: float64 x/y/z + uchar return_number
# ---------------------------------------------------------------------------


def save_ply(cloud: PointCloud, path: str | Path) -> None:
    n = len(cloud)
    rn = cloud.return_number
    if rn is None:
        rn = np.ones(n, dtype=np.uint8)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n}\n"
        "property float64 x\n"
        "property float64 y\n"
        "property float64 z\n"
        "property uchar return_number\n"
        "end_header\n"
    )
    rec = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("r", "u1")])
    data = np.empty(n, dtype=rec)
    data["x"], data["y"], data["z"] = cloud.xyz[:, 0], cloud.xyz[:, 1], cloud.xyz[:, 2]
    data["r"] = rn
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(data.tobytes())


def load_ply(path: str | Path) -> PointCloud:
    with open(path, "rb") as f:
        blob = f.read()
    end = blob.find(b"end_header\n")
    if not blob.startswith(b"ply\n") or end < 0:
        raise PointCloudError(f"{path}: not a PLY file")
    header = blob[:end].decode("ascii").splitlines()
    if "format binary_little_endian 1.0" not in header:
        raise PointCloudError(f"{path}: only binary little-endian PLY is supported")
    n = 0
    for line in header:
        if line.startswith("element vertex"):
            n = int(line.split()[-1])
    rec = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("r", "u1")])
    data = np.frombuffer(blob[end + len(b"end_header\n"):], dtype=rec, count=n)
    xyz = np.stack([data["x"], data["y"], data["z"]], axis=1).astype(np.float64)
    return PointCloud(xyz, data["r"].copy())


def load_cloud(path: str | Path) -> PointCloud:
    """Dispatch on extension: .xyz (ASCII) or .ply (binary)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".xyz":
        return load_xyz(path)
    if suffix == ".ply":
        return load_ply(path)
    raise PointCloudError(f"unsupported point cloud format {suffix!r}")


def save_cloud(cloud: PointCloud, path: str | Path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".xyz":
        save_xyz(cloud, path)
    elif suffix == ".ply":
        save_ply(cloud, path)
    else:
        raise PointCloudError(f"unsupported point cloud format {suffix!r}")

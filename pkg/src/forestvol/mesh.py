"""Triangle meshes, watertightness checks and exact signed volumes.

The mesh layer is the ground-truth engine of the pipeline: every wood
volume label is the divergence-theorem volume of a watertight triangle
mesh. Meshes are immutable; all operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEGENERATE_AREA_EPS = 1e-12  # m^2, faces below this are rejected at construction


class MeshError(ValueError):
    """Raised for invalid mesh construction or operations on unfit meshes."""


@dataclass(frozen=True)
class WatertightReport:
    watertight: bool
    boundary_edges: list[tuple[int, int]] = field(default_factory=list)


class TriangleMesh:
    """Indexed triangle surface with consistent outward winding.

    vertices: (V, 3) float64 positions in meters.
    faces: (F, 3) int vertex indices, counter-clockwise seen from outside.
    """

    def __init__(self, vertices, faces, validate: bool = True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (V, 3), got {self.vertices.shape}")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError(f"faces must be (F, 3), got {self.faces.shape}")
        if validate:
            self._validate()

    def _validate(self) -> None:
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError("face index out of range")
        areas = self.face_areas()
        bad = np.nonzero(areas < DEGENERATE_AREA_EPS)[0]
        if bad.size:
            raise MeshError(f"degenerate (zero-area) faces at indices {bad[:8].tolist()}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def triangles(self) -> np.ndarray:
        """Face corner positions, shape (F, 3, 3)."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        tri = self.triangles()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box as (min, max), each shape (3,)."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def check_watertight(mesh: TriangleMesh) -> WatertightReport:
    """Edge-manifold closure check.

    A mesh is watertight iff every undirected edge is shared by exactly
    two faces, traversed in opposite directions (consistent orientation).
    Boundary edges are those violating the rule, reported as sorted
    vertex-index pairs.
    """
    f = mesh.faces
    if len(f) == 0:
        return WatertightReport(False, [])
    directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    # Net circulation per undirected edge must vanish and multiplicity must be 2.
    a = directed.min(axis=1)
    b = directed.max(axis=1)
    sign = np.where(directed[:, 0] < directed[:, 1], 1, -1)
    key = a * (mesh.n_vertices + 1) + b
    order = np.argsort(key, kind="stable")
    key_s, sign_s = key[order], sign[order]
    uniq, start = np.unique(key_s, return_index=True)
    counts = np.diff(np.append(start, len(key_s)))
    net = np.add.reduceat(sign_s, start)
    bad = (counts != 2) | (net != 0)
    boundary = []
    for k in uniq[bad]:
        boundary.append((int(k // (mesh.n_vertices + 1)), int(k % (mesh.n_vertices + 1))))
    return WatertightReport(watertight=not boundary, boundary_edges=boundary)


def signed_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume in m^3 by the divergence theorem.

    Sums (1/6) det[v0 v1 v2] over faces (signed tetrahedra against the
    origin); positive for outward winding. Requires a watertight mesh.
    """
    report = check_watertight(mesh)
    if not report.watertight:
        raise MeshError(
            f"mesh is not watertight; {len(report.boundary_edges)} boundary edges, "
            f"first few: {report.boundary_edges[:6]}"
        )
    return _signed_volume_raw(mesh)


def _signed_volume_raw(mesh: TriangleMesh) -> float:
    # Recentering on the vertex centroid is a no-op for closed surfaces but
    # kills the catastrophic cancellation a far-from-origin mesh would suffer.
    tri = (mesh.vertices - mesh.vertices.mean(axis=0))[mesh.faces]
    det = np.einsum("fi,fi->f", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))
    return float(np.sum(det) / 6.0)


def transform(
    mesh: TriangleMesh,
    rotation_z: float = 0.0,
    translation=(0.0, 0.0, 0.0),
    scale: float = 1.0,
) -> TriangleMesh:
    """Apply scale, then z-rotation (degrees), then translation."""
    if scale <= 0:
        raise MeshError(f"scale must be positive, got {scale}")
    v = mesh.vertices * scale
    v = rotate_z(v, rotation_z)
    v = v + np.asarray(translation, dtype=np.float64)
    return TriangleMesh(v, mesh.faces, validate=False)


def rotate_z(points: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate (N, 3) points about the +z axis."""
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return points @ rot.T


def merge(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one; components stay disconnected."""
    if not meshes:
        raise MeshError("cannot merge an empty mesh list")
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    return TriangleMesh(np.concatenate(verts), np.concatenate(faces), validate=False)


# ---------------------------------------------------------------------------
# Closed primitives
# ---------------------------------------------------------------------------


def make_box(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned closed box with outward winding; origin = min corner."""
    sx, sy, sz = size
    ox, oy, oz = origin
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    ) * [sx, sy, sz] + [ox, oy, oz]
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom (normal -z)
            [4, 5, 6], [4, 6, 7],  # top (+z)
            [0, 1, 5], [0, 5, 4],  # front (-y)
            [2, 3, 7], [2, 7, 6],  # back (+y)
            [1, 2, 6], [1, 6, 5],  # right (+x)
            [3, 0, 4], [3, 4, 7],  # left (-x)
        ],
        dtype=np.int64,
    )
    return TriangleMesh(v, f)


def make_frustum_stack(
    ring_z: np.ndarray,
    ring_r: np.ndarray,
    segments: int = 12,
    ring_centers: np.ndarray | None = None,
) -> TriangleMesh:
    """Closed stack of tapered frusta (a generalized capped cylinder).

    ring_z: (L,) ascending heights of the rings; ring_r: (L,) radii > 0;
    ring_centers: optional (L, 2) xy offsets per ring (horizontal shear,
    which leaves the enclosed volume equal to the straight stack).
    """
    ring_z = np.asarray(ring_z, dtype=np.float64)
    ring_r = np.asarray(ring_r, dtype=np.float64)
    n = len(ring_z)
    if n < 2:
        raise MeshError("frustum stack needs at least two rings")
    if np.any(ring_r <= 0):
        raise MeshError("ring radii must be positive")
    if np.any(np.diff(ring_z) <= 0):
        raise MeshError("ring heights must be strictly increasing")
    if ring_centers is None:
        ring_centers = np.zeros((n, 2))
    ang = 2.0 * np.pi * np.arange(segments) / segments
    cos_a, sin_a = np.cos(ang), np.sin(ang)

    verts = np.empty((n * segments + 2, 3))
    for i in range(n):
        verts[i * segments:(i + 1) * segments, 0] = ring_centers[i, 0] + ring_r[i] * cos_a
        verts[i * segments:(i + 1) * segments, 1] = ring_centers[i, 1] + ring_r[i] * sin_a
        verts[i * segments:(i + 1) * segments, 2] = ring_z[i]
    bottom_c = n * segments
    top_c = n * segments + 1
    verts[bottom_c] = [ring_centers[0, 0], ring_centers[0, 1], ring_z[0]]
    verts[top_c] = [ring_centers[-1, 0], ring_centers[-1, 1], ring_z[-1]]

    faces = []
    for i in range(n - 1):
        lo = i * segments
        hi = (i + 1) * segments
        for j in range(segments):
            k = (j + 1) % segments
            faces.append([lo + j, lo + k, hi + k])
            faces.append([lo + j, hi + k, hi + j])
    for j in range(segments):
        k = (j + 1) % segments
        faces.append([bottom_c, k, j])                                # bottom fan, -z
        faces.append([top_c, (n - 1) * segments + j, (n - 1) * segments + k])  # top fan, +z
    return TriangleMesh(verts, np.array(faces, dtype=np.int64))


def make_cylinder(radius: float, height: float, segments: int = 32) -> TriangleMesh:
    """Closed upright cylinder with base at z=0."""
    return make_frustum_stack(
        np.array([0.0, height]), np.array([radius, radius]), segments=segments
    )


def frustum_volume(h: float, r1: float, r2: float) -> float:
    """Analytic circular frustum volume (pi*h/3)(r1^2 + r1*r2 + r2^2)."""
    return np.pi * h / 3.0 * (r1 * r1 + r1 * r2 + r2 * r2)


# ---------------------------------------------------------------------------
# OBJ subset persistence: `v x y z` and `f i j k` lines, 1-based indices
# ---------------------------------------------------------------------------


def save_obj(mesh: TriangleMesh, path: str | Path) -> None:
    lines = []
    for x, y, z in mesh.vertices.tolist():
        lines.append(f"v {x!r} {y!r} {z!r}")
    for i, j, k in mesh.faces + 1:
        lines.append(f"f {i} {j} {k}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_obj(path: str | Path) -> TriangleMesh:
    verts, faces = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v" and len(parts) == 4:
            verts.append([float(p) for p in parts[1:]])
        elif parts[0] == "f" and len(parts) == 4:
            faces.append([int(p) - 1 for p in parts[1:]])
        else:
            raise MeshError(f"{path}:{lineno}: unsupported OBJ line {line[:40]!r}")
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64), validate=False)

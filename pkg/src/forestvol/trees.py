"""Procedural eucalypt-like tree meshes with exact wood-volume geometry.

Each tree is a watertight trunk (stacked tapered frusta, horizontally
sheared for a natural lean) plus recursively attached branch solids,
every one a closed capped frustum. Open leaf quads are attached at
terminal branch tips; they are scan geometry only and never count
toward wood volume. Wood and leaf randomness come from independent
seed streams, so changing leaf density cannot perturb the wood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriangleMesh, make_frustum_stack, merge

MIN_BRANCH_RADIUS = 0.012  # m, floor keeping faces well above the degeneracy epsilon


@dataclass(frozen=True)
class TreeArchetype:
    """Parameter envelope for one recurring tree form (7 shipped defaults)."""

    id: int
    trunk_height_range: tuple[float, float]  # m
    dbh_range: tuple[float, float]           # m, diameter at 1.3 m
    branch_depth: int                        # recursion levels below the trunk
    branch_count_range: tuple[int, int]      # children per node
    taper_ratio: float                       # child/parent radius scale
    leaf_density: int                        # leaf quads per terminal tip

    def __post_init__(self):
        for name in ("trunk_height_range", "dbh_range", "branch_count_range"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise ValueError(f"{name} must be positive with min <= max, got {(lo, hi)}")
        if self.branch_depth < 0 or self.taper_ratio <= 0 or self.leaf_density < 0:
            raise ValueError("branch_depth/leaf_density must be >= 0 and taper_ratio > 0")


# Heights span 8-30 m and stem diameters 0.15-0.6 m across the set, so that
# plots mixing these forms land in the target area/height statistics.
DEFAULT_ARCHETYPES: tuple[TreeArchetype, ...] = (
    TreeArchetype(0, (8.0, 12.0), (0.15, 0.25), 1, (2, 4), 0.55, 6),
    TreeArchetype(1, (10.0, 15.0), (0.18, 0.30), 2, (2, 3), 0.55, 5),
    TreeArchetype(2, (13.0, 18.0), (0.22, 0.36), 2, (2, 4), 0.60, 6),
    TreeArchetype(3, (16.0, 22.0), (0.28, 0.42), 2, (3, 4), 0.58, 7),
    TreeArchetype(4, (20.0, 26.0), (0.34, 0.50), 2, (2, 4), 0.62, 8),
    TreeArchetype(5, (24.0, 30.0), (0.42, 0.60), 2, (2, 3), 0.65, 9),
    TreeArchetype(6, (9.0, 14.0), (0.16, 0.26), 3, (2, 3), 0.50, 4),
)


def archetype_by_id(archetype_id: int) -> TreeArchetype:
    for a in DEFAULT_ARCHETYPES:
        if a.id == archetype_id:
            return a
    raise KeyError(f"unknown archetype id {archetype_id}")


@dataclass(frozen=True)
class Tree:
    """One generated tree, rooted at the origin with the trunk base at z=0."""

    wood_mesh: TriangleMesh
    leaf_surfaces: TriangleMesh | None
    trunk_ring_z: np.ndarray
    trunk_ring_r: np.ndarray
    height: float


def _rotation_from_z(direction: np.ndarray) -> np.ndarray:
    """Rotation matrix taking +z onto the given unit direction (Rodrigues)."""
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, direction))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(z, direction)
    axis /= np.linalg.norm(axis)
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    s = np.sqrt(1.0 - c * c)
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def _branch_mesh(
    base: np.ndarray, direction: np.ndarray, length: float, radius: float, segments: int
) -> TriangleMesh:
    r_tip = max(MIN_BRANCH_RADIUS, 0.25 * radius)
    local = make_frustum_stack(
        np.array([0.0, 0.55 * length, length]),
        np.array([radius, 0.7 * radius, r_tip]),
        segments=segments,
    )
    verts = local.vertices @ _rotation_from_z(direction).T + base
    return TriangleMesh(verts, local.faces, validate=False)


def _orthonormal_frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(direction[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(direction, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(direction, u)


def _grow_branches(
    rng: np.random.Generator,
    archetype: TreeArchetype,
    base: np.ndarray,
    direction: np.ndarray,
    length: float,
    radius: float,
    depth_left: int,
    segments: int,
    meshes: list[TriangleMesh],
    tips: list[np.ndarray],
) -> None:
    mesh = _branch_mesh(base, direction, length, radius, segments)
    meshes.append(mesh)
    tip = base + direction * length
    if depth_left == 0:
        tips.append(tip)
        return
    lo, hi = archetype.branch_count_range
    count = int(rng.integers(lo, hi + 1))
    u_axis, v_axis = _orthonormal_frame(direction)
    for _ in range(count):
        t = rng.uniform(0.4, 0.95)
        attach = base + direction * (t * length)
        tilt = np.deg2rad(rng.uniform(25.0, 55.0))
        azim = rng.uniform(0.0, 2.0 * np.pi)
        child_dir = (
            np.cos(tilt) * direction
            + np.sin(tilt) * (np.cos(azim) * u_axis + np.sin(azim) * v_axis)
        )
        child_dir /= np.linalg.norm(child_dir)
        child_len = length * rng.uniform(0.5, 0.72)
        child_rad = max(MIN_BRANCH_RADIUS, radius * archetype.taper_ratio * rng.uniform(0.8, 1.0))
        _grow_branches(
            rng, archetype, attach, child_dir, child_len, min(child_rad, radius),
            depth_left - 1, segments, meshes, tips,
        )


def _leaf_quads(rng: np.random.Generator, tips: list[np.ndarray], per_tip: int) -> TriangleMesh | None:
    verts, faces = [], []
    for tip in tips:
        for _ in range(per_tip):
            center = tip + rng.normal(0.0, 0.45, size=3)
            normal = rng.normal(size=3)
            normal /= np.linalg.norm(normal)
            u, v = _orthonormal_frame(normal)
            half = 0.5 * rng.uniform(0.25, 0.5)
            base = len(verts)
            verts.extend(
                [center + half * (u + v), center + half * (u - v),
                 center - half * (u + v), center - half * (u - v)]
            )
            faces.append([base, base + 1, base + 2])
            faces.append([base, base + 2, base + 3])
    if not faces:
        return None
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64), validate=False)


def generate_tree(archetype: TreeArchetype, seed: int, radial_segments: int = 10) -> Tree:
    """Deterministically grow one tree; same (archetype, seed) is bitwise stable."""
    rng_wood = np.random.default_rng(np.random.SeedSequence((int(seed), archetype.id, 0)))
    rng_leaf = np.random.default_rng(np.random.SeedSequence((int(seed), archetype.id, 1)))

    height = rng_wood.uniform(*archetype.trunk_height_range)
    dbh = rng_wood.uniform(*archetype.dbh_range)
    r_tip = max(MIN_BRANCH_RADIUS, 0.08 * dbh / 2.0)
    # Linear taper calibrated so the radius at breast height (1.3 m) is dbh/2.
    bh = 1.3 / height
    r_base = (dbh / 2.0 - r_tip * bh) / (1.0 - bh)

    n_rings = 8
    ring_z = np.linspace(0.0, height, n_rings)
    ring_r = r_base + (r_tip - r_base) * ring_z / height
    lean = np.vstack(
        [np.zeros(2), np.cumsum(rng_wood.normal(0.0, 0.006 * height, size=(n_rings - 1, 2)), axis=0)]
    )
    trunk = make_frustum_stack(ring_z, ring_r, segments=radial_segments, ring_centers=lean)

    meshes = [trunk]
    tips: list[np.ndarray] = []
    if archetype.branch_depth > 0:
        lo, hi = archetype.branch_count_range
        count = int(rng_wood.integers(lo, hi + 1))
        for _ in range(count):
            u = rng_wood.uniform(0.5, 0.92)
            z = u * height
            xy = np.array(
                [np.interp(z, ring_z, lean[:, 0]), np.interp(z, ring_z, lean[:, 1])]
            )
            attach = np.array([xy[0], xy[1], z])
            tilt = np.deg2rad(rng_wood.uniform(30.0, 65.0))
            azim = rng_wood.uniform(0.0, 2.0 * np.pi)
            direction = np.array(
                [np.sin(tilt) * np.cos(azim), np.sin(tilt) * np.sin(azim), np.cos(tilt)]
            )
            trunk_r_here = float(np.interp(z, ring_z, ring_r))
            radius = max(MIN_BRANCH_RADIUS, trunk_r_here * archetype.taper_ratio)
            length = height * rng_wood.uniform(0.18, 0.30)
            _grow_branches(
                rng_wood, archetype, attach, direction, length, radius,
                archetype.branch_depth - 1, radial_segments, meshes, tips,
            )
    if not tips:
        tips = [np.array([lean[-1, 0], lean[-1, 1], height])]

    wood = merge(meshes)
    leaves = _leaf_quads(rng_leaf, tips, archetype.leaf_density)
    return Tree(
        wood_mesh=wood,
        leaf_surfaces=leaves,
        trunk_ring_z=ring_z,
        trunk_ring_r=ring_r,
        height=float(height),
    )

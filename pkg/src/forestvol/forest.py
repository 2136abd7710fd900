"""Forest plot synthesis: placement, volume labels, rotation augmentation.

A plot is a rectangle of procedurally grown trees whose summed wood-mesh
volume is the regression label. Plot area scales with tree count so stem
density stays inside configured bounds. Rotated copies (45..315 degrees
about the plot center) carry the base label verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, load_obj, rotate_z, save_obj, signed_volume
from .trees import DEFAULT_ARCHETYPES, TreeArchetype, generate_tree

ROTATION_ANGLES = (45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0)
MANIFEST_FORMAT = "forestvol-dataset-v1"


class PlotGenerationError(RuntimeError):
    """Raised when tree placement cannot satisfy the spacing constraints."""


@dataclass(frozen=True)
class PlotConfig:
    tree_count_range: tuple[int, int] = (2, 15)
    area_per_tree_range: tuple[float, float] = (28.0, 44.0)  # m^2 per stem
    width_range: tuple[float, float] = (10.0, 26.0)
    depth_range: tuple[float, float] = (10.0, 26.0)
    archetype_weights: tuple[float, ...] = (1.0,) * len(DEFAULT_ARCHETYPES)
    min_spacing: float = 1.0          # m between trunk bases
    edge_margin: float = 1.0          # m, trunk bases stay inside by this much
    max_retries: int = 1000
    radial_segments: int = 10

    def __post_init__(self):
        if self.tree_count_range[0] < 1 or self.tree_count_range[1] < self.tree_count_range[0]:
            raise ValueError("tree_count_range must satisfy 1 <= min <= max")
        for name in ("area_per_tree_range", "width_range", "depth_range"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise ValueError(f"{name} must be positive with min <= max")
        if len(self.archetype_weights) != len(DEFAULT_ARCHETYPES):
            raise ValueError("archetype_weights must have one weight per archetype")
        if self.min_spacing < 0 or self.max_retries < 1:
            raise ValueError("min_spacing must be >= 0 and max_retries >= 1")


@dataclass(frozen=True)
class TreeInstance:
    archetype_id: int
    tree_seed: int
    position: tuple[float, float]
    heading_deg: float
    wood_mesh: TriangleMesh
    leaf_mesh: TriangleMesh | None


@dataclass(frozen=True)
class ForestPlot:
    plot_id: str
    width: float
    depth: float
    tree_instances: list[TreeInstance]
    ground_truth_volume: float
    rotation_tag: float = 0.0
    base_plot_id: str = ""
    seed: int = 0

    def wood_meshes(self) -> list[TriangleMesh]:
        return [t.wood_mesh for t in self.tree_instances]

    def leaf_meshes(self) -> list[TriangleMesh]:
        return [t.leaf_mesh for t in self.tree_instances if t.leaf_mesh is not None]

    def scene_meshes(self) -> list[TriangleMesh]:
        return self.wood_meshes() + self.leaf_meshes()


def _place_trees(
    rng: np.random.Generator, n: int, width: float, depth: float, cfg: PlotConfig
) -> np.ndarray:
    lo = cfg.edge_margin
    positions: list[tuple[float, float]] = []
    attempts = 0
    while len(positions) < n:
        if attempts >= cfg.max_retries:
            raise PlotGenerationError(
                f"placed {len(positions)}/{n} trees in {attempts} attempts "
                f"(plot {width:.1f}x{depth:.1f} m, spacing {cfg.min_spacing} m)"
            )
        attempts += 1
        x = rng.uniform(lo, width - lo)
        y = rng.uniform(lo, depth - lo)
        if all((x - px) ** 2 + (y - py) ** 2 >= cfg.min_spacing**2 for px, py in positions):
            positions.append((x, y))
    return np.array(positions)


def _placed_mesh(mesh: TriangleMesh, heading_deg: float, x: float, y: float) -> TriangleMesh:
    verts = rotate_z(mesh.vertices, heading_deg) + np.array([x, y, 0.0])
    return TriangleMesh(verts, mesh.faces, validate=False)


def generate_plot(config: PlotConfig, seed: int, plot_id: str | None = None) -> ForestPlot:
    """Grow one plot; a pure function of (config, seed)."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 100)))
    n = int(rng.integers(config.tree_count_range[0], config.tree_count_range[1] + 1))
    area = n * rng.uniform(*config.area_per_tree_range)
    w_lo, w_hi = config.width_range
    d_lo, d_hi = config.depth_range
    area = float(np.clip(area, w_lo * d_lo, w_hi * d_hi))
    width = rng.uniform(max(w_lo, area / d_hi), min(w_hi, area / d_lo))
    depth = area / width

    positions = _place_trees(rng, n, width, depth, config)
    weights = np.asarray(config.archetype_weights, dtype=np.float64)
    weights = weights / weights.sum()
    archetype_ids = rng.choice(len(DEFAULT_ARCHETYPES), size=n, p=weights)

    instances = []
    total = 0.0
    for i in range(n):
        archetype = DEFAULT_ARCHETYPES[int(archetype_ids[i])]
        tree_seed = int(np.random.SeedSequence((int(seed), 200, i)).generate_state(1)[0])
        tree = generate_tree(archetype, tree_seed, radial_segments=config.radial_segments)
        heading = float(rng.uniform(0.0, 360.0))
        x, y = positions[i]
        wood = _placed_mesh(tree.wood_mesh, heading, x, y)
        leaf = (
            _placed_mesh(tree.leaf_surfaces, heading, x, y)
            if tree.leaf_surfaces is not None
            else None
        )
        total += signed_volume(wood)
        instances.append(
            TreeInstance(archetype.id, tree_seed, (float(x), float(y)), heading, wood, leaf)
        )
    pid = plot_id if plot_id is not None else f"p{seed}"
    return ForestPlot(
        plot_id=pid,
        width=float(width),
        depth=float(depth),
        tree_instances=instances,
        ground_truth_volume=total,
        rotation_tag=0.0,
        base_plot_id=pid,
        seed=int(seed),
    )


def rotate_plot(plot: ForestPlot, angle_deg: float) -> ForestPlot:
    """Rigidly rotate a plot about its rectangle center; the label is copied."""
    center = np.array([plot.width / 2.0, plot.depth / 2.0, 0.0])

    def rot(mesh: TriangleMesh | None) -> TriangleMesh | None:
        if mesh is None:
            return None
        verts = rotate_z(mesh.vertices - center, angle_deg) + center
        return TriangleMesh(verts, mesh.faces, validate=False)

    instances = [
        TreeInstance(t.archetype_id, t.tree_seed, t.position, t.heading_deg,
                     rot(t.wood_mesh), rot(t.leaf_mesh))
        for t in plot.tree_instances
    ]
    return ForestPlot(
        plot_id=f"{plot.plot_id}_r{int(angle_deg)}",
        width=plot.width,
        depth=plot.depth,
        tree_instances=instances,
        ground_truth_volume=plot.ground_truth_volume,
        rotation_tag=angle_deg,
        base_plot_id=plot.base_plot_id,
        seed=plot.seed,
    )


def rotate_augment(plot: ForestPlot) -> list[ForestPlot]:
    """Seven rotated copies (45..315 deg). Only base plots may be augmented."""
    if plot.rotation_tag != 0.0:
        raise ValueError(f"plot {plot.plot_id} is already rotated (tag {plot.rotation_tag})")
    return [rotate_plot(plot, a) for a in ROTATION_ANGLES]


# ---------------------------------------------------------------------------
# Dataset manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    plot_id: str
    base_plot_id: str
    seed: int
    rotation_tag: float
    ground_truth_volume_m3: float
    width_m: float
    depth_m: float
    wood_obj: str
    leaf_obj: str | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DatasetManifest:
    master_seed: int
    config: dict
    plots: list[ManifestEntry] = field(default_factory=list)

    def base_entries(self) -> list[ManifestEntry]:
        return [e for e in self.plots if e.rotation_tag == 0.0]

    def save(self, path: str | Path) -> None:
        doc = {
            "format": MANIFEST_FORMAT,
            "master_seed": self.master_seed,
            "config": self.config,
            "plots": [e.to_json() for e in self.plots],
        }
        Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"unsupported manifest format {doc.get('format')!r}")
        entries = [ManifestEntry(**p) for p in doc["plots"]]
        return DatasetManifest(doc["master_seed"], doc["config"], entries)


def generate_dataset(
    config: PlotConfig,
    master_seed: int,
    n_plots: int,
    out_dir: str | Path,
    augment: bool = True,
    config_doc: dict | None = None,
) -> DatasetManifest:
    """Generate base plots + manifest rows for all rotated copies.

    Base plot meshes are written as OBJ; rotated rows reference the base
    mesh and are materialized on demand from (base mesh, rotation_tag).
    """
    out = Path(out_dir)
    (out / "meshes").mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(master_seed=int(master_seed), config=config_doc or {})
    for i in range(n_plots):
        seed = int(np.random.SeedSequence((int(master_seed), 300, i)).generate_state(1)[0])
        plot = generate_plot(config, seed, plot_id=f"p{i:04d}")
        wood_path = f"meshes/{plot.plot_id}_wood.obj"
        leaf_path = f"meshes/{plot.plot_id}_leaf.obj"
        from .mesh import merge  # local import to avoid cycle at module load

        save_obj(merge(plot.wood_meshes()), out / wood_path)
        leaves = plot.leaf_meshes()
        if leaves:
            save_obj(merge(leaves), out / leaf_path)
        else:
            leaf_path = None
        base_entry = ManifestEntry(
            plot_id=plot.plot_id,
            base_plot_id=plot.plot_id,
            seed=seed,
            rotation_tag=0.0,
            ground_truth_volume_m3=plot.ground_truth_volume,
            width_m=plot.width,
            depth_m=plot.depth,
            wood_obj=wood_path,
            leaf_obj=leaf_path,
        )
        manifest.plots.append(base_entry)
        if augment:
            for angle in ROTATION_ANGLES:
                manifest.plots.append(
                    ManifestEntry(
                        plot_id=f"{plot.plot_id}_r{int(angle)}",
                        base_plot_id=plot.plot_id,
                        seed=seed,
                        rotation_tag=angle,
                        ground_truth_volume_m3=plot.ground_truth_volume,
                        width_m=plot.width,
                        depth_m=plot.depth,
                        wood_obj=wood_path,
                        leaf_obj=leaf_path,
                    )
                )
    manifest.save(out / "manifest.json")
    return manifest


def load_plot_meshes(dataset_dir: str | Path, entry: ManifestEntry) -> list[TriangleMesh]:
    """Scene meshes (wood + leaves) for a manifest entry, rotation applied."""
    root = Path(dataset_dir)
    meshes = [load_obj(root / entry.wood_obj)]
    if entry.leaf_obj:
        meshes.append(load_obj(root / entry.leaf_obj))
    if entry.rotation_tag != 0.0:
        center = np.array([entry.width_m / 2.0, entry.depth_m / 2.0, 0.0])
        meshes = [
            TriangleMesh(rotate_z(m.vertices - center, entry.rotation_tag) + center, m.faces,
                         validate=False)
            for m in meshes
        ]
    return meshes

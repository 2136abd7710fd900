import numpy as np
import pytest

from forestvol.forest import (
    DatasetManifest,
    ForestPlot,
    PlotConfig,
    PlotGenerationError,
    ROTATION_ANGLES,
    generate_dataset,
    generate_plot,
    load_plot_meshes,
    rotate_augment,
)
from forestvol.mesh import merge, signed_volume
from forestvol.trees import DEFAULT_ARCHETYPES, generate_tree


def single_tree_config(archetype_id=2):
    weights = [0.0] * len(DEFAULT_ARCHETYPES)
    weights[archetype_id] = 1.0
    return PlotConfig(tree_count_range=(1, 1), archetype_weights=tuple(weights))


def test_single_tree_plot_volume_matches_standalone():
    cfg = single_tree_config()
    plot = generate_plot(cfg, seed=42)
    assert len(plot.tree_instances) == 1
    inst = plot.tree_instances[0]
    standalone = generate_tree(DEFAULT_ARCHETYPES[2], inst.tree_seed,
                               radial_segments=cfg.radial_segments)
    v_alone = signed_volume(standalone.wood_mesh)
    assert plot.ground_truth_volume == pytest.approx(v_alone, rel=1e-12)


def test_two_tree_plot_is_sum_of_components():
    cfg = PlotConfig(tree_count_range=(2, 2))
    plot = generate_plot(cfg, seed=7)
    parts = sum(signed_volume(m) for m in plot.wood_meshes())
    assert plot.ground_truth_volume == pytest.approx(parts, rel=1e-12)


def test_plot_determinism():
    cfg = PlotConfig()
    a = generate_plot(cfg, seed=5)
    b = generate_plot(cfg, seed=5)
    assert a.ground_truth_volume == b.ground_truth_volume
    np.testing.assert_array_equal(
        a.tree_instances[0].wood_mesh.vertices, b.tree_instances[0].wood_mesh.vertices
    )


def test_trunk_bases_inside_plot_and_spacing():
    cfg = PlotConfig(tree_count_range=(8, 12))
    plot = generate_plot(cfg, seed=21)
    pos = np.array([t.position for t in plot.tree_instances])
    assert np.all(pos[:, 0] >= 0) and np.all(pos[:, 0] <= plot.width)
    assert np.all(pos[:, 1] >= 0) and np.all(pos[:, 1] <= plot.depth)
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    assert d2.min() >= cfg.min_spacing**2 - 1e-12


def test_placement_failure_raises():
    cfg = PlotConfig(
        tree_count_range=(15, 15),
        area_per_tree_range=(1.0, 1.0),
        width_range=(10.0, 10.0),
        depth_range=(10.0, 10.0),
        min_spacing=4.0,
        max_retries=50,
    )
    with pytest.raises(PlotGenerationError, match="placed"):
        generate_plot(cfg, seed=1)


def test_rotate_augment_seven_copies_same_label():
    plot = generate_plot(PlotConfig(tree_count_range=(2, 4)), seed=9)
    copies = rotate_augment(plot)
    assert len(copies) == 7
    assert [c.rotation_tag for c in copies] == list(ROTATION_ANGLES)
    for c in copies:
        assert c.ground_truth_volume == plot.ground_truth_volume  # copied, not recomputed
        recomputed = sum(signed_volume(m) for m in c.wood_meshes())
        assert recomputed == pytest.approx(plot.ground_truth_volume, rel=1e-9)


def test_rotating_rotated_plot_rejected():
    plot = generate_plot(PlotConfig(tree_count_range=(1, 2)), seed=3)
    rotated = rotate_augment(plot)[0]
    with pytest.raises(ValueError, match="already rotated"):
        rotate_augment(rotated)


def test_double_180_returns_to_start():
    from forestvol.forest import rotate_plot

    plot = generate_plot(PlotConfig(tree_count_range=(1, 2)), seed=13)
    once = rotate_plot(plot, 180.0)
    twice = rotate_plot(ForestPlot(
        plot_id=once.plot_id, width=once.width, depth=once.depth,
        tree_instances=once.tree_instances, ground_truth_volume=once.ground_truth_volume,
        rotation_tag=0.0, base_plot_id=once.base_plot_id, seed=once.seed,
    ), 180.0)
    np.testing.assert_allclose(
        twice.tree_instances[0].wood_mesh.vertices,
        plot.tree_instances[0].wood_mesh.vertices,
        atol=1e-9,
    )


def test_dataset_generation_manifest_roundtrip(tmp_path):
    cfg = PlotConfig(tree_count_range=(1, 3))
    manifest = generate_dataset(cfg, master_seed=77, n_plots=3, out_dir=tmp_path)
    assert len(manifest.plots) == 3 * 8
    assert len(manifest.base_entries()) == 3

    back = DatasetManifest.load(tmp_path / "manifest.json")
    assert back.master_seed == 77
    assert [e.plot_id for e in back.plots] == [e.plot_id for e in manifest.plots]
    for e in back.plots:
        assert e.ground_truth_volume_m3 > 0

    # Rotated entry meshes materialize from the base OBJ + tag; the volume of
    # the wood component must agree with the stored label.
    rot_entry = next(e for e in back.plots if e.rotation_tag == 90.0)
    meshes = load_plot_meshes(tmp_path, rot_entry)
    assert signed_volume(meshes[0]) == pytest.approx(rot_entry.ground_truth_volume_m3, rel=1e-9)


def test_dataset_volumes_positive_and_areas_in_bounds(tmp_path):
    cfg = PlotConfig()
    manifest = generate_dataset(cfg, master_seed=1, n_plots=12, out_dir=tmp_path, augment=False)
    for e in manifest.plots:
        assert e.ground_truth_volume_m3 > 0
        area = e.width_m * e.depth_m
        assert cfg.width_range[0] * cfg.depth_range[0] - 1e-9 <= area
        assert area <= cfg.width_range[1] * cfg.depth_range[1] + 1e-9
        assert cfg.width_range[0] <= e.width_m <= cfg.width_range[1]
        assert cfg.depth_range[0] <= e.depth_m <= cfg.depth_range[1]

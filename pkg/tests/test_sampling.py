import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestvol.cloud import PointCloud, PointCloudError
from forestvol.sampling import (
    farthest_point_sample,
    fps_indices,
    fps_indices_batch,
    jitter,
    random_sample,
    tile,
)


def brute_force_fps(xyz: np.ndarray, n: int, start: int) -> list[int]:
    """O(n^2) reference: recompute min distances from scratch each step."""
    selected = [start]
    while len(selected) < n:
        best_idx, best_d = -1, -1.0
        for i in range(len(xyz)):
            if i in selected:
                continue
            d = min(float(np.sum((xyz[i] - xyz[j]) ** 2)) for j in selected)
            if d > best_d:  # strict: ties keep the earlier (lower) index
                best_d, best_idx = d, i
        selected.append(best_idx)
    return selected


def random_cloud(n, seed, scale=10.0):
    rng = np.random.default_rng(seed)
    return PointCloud(rng.uniform(0, scale, size=(n, 3)))


def test_fps_hand_example_1d():
    xyz = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [9, 0, 0], [10, 0, 0]])
    idx = fps_indices(xyz, 3, start_index=0)
    assert list(idx) == [0, 4, 2]


def test_fps_matches_brute_force_oracle():
    for seed in range(25):
        cloud = random_cloud(int(np.random.default_rng(seed).integers(8, 64)), seed)
        start = int(np.random.default_rng(seed + 1).integers(0, len(cloud)))
        n = min(10, len(cloud))
        fast = list(fps_indices(cloud.xyz, n, start))
        slow = brute_force_fps(cloud.xyz, n, start)
        assert fast == slow, f"seed {seed}"


def test_fps_batch_matches_single():
    rng = np.random.default_rng(0)
    xyz = rng.uniform(0, 5, size=(4, 50, 3))
    starts = np.array([0, 3, 7, 11])
    batch = fps_indices_batch(xyz, 12, starts)
    for b in range(4):
        single = fps_indices(xyz[b], 12, int(starts[b]))
        np.testing.assert_array_equal(batch[b], single)


def test_fps_exhaustive_is_permutation():
    cloud = random_cloud(30, 5)
    out = farthest_point_sample(cloud, 30, seed=2)
    assert sorted(map(tuple, out.xyz.tolist())) == sorted(map(tuple, cloud.xyz.tolist()))


def test_fps_rejects_oversample():
    with pytest.raises(PointCloudError):
        farthest_point_sample(random_cloud(5, 0), 6, seed=0)


def test_random_sample_identity_case():
    cloud = random_cloud(20, 3)
    out = random_sample(cloud, 20, seed=9)
    assert sorted(map(tuple, out.xyz.tolist())) == sorted(map(tuple, cloud.xyz.tolist()))


def test_random_sample_uniformity():
    cloud = PointCloud(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    hits = 0
    trials = 10000
    for seed in range(trials):
        out = random_sample(cloud, 1, seed=seed)
        hits += int(out.xyz[0, 0] == 0.0)
    assert abs(hits / trials - 0.5) < 0.02


def test_random_sample_deterministic():
    cloud = random_cloud(100, 7)
    a = random_sample(cloud, 10, seed=123)
    b = random_sample(cloud, 10, seed=123)
    np.testing.assert_array_equal(a.xyz, b.xyz)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=40))
def test_samplers_subset_property(seed, n):
    cloud = random_cloud(40, 11)
    pool = set(map(tuple, cloud.xyz.tolist()))
    rs = random_sample(cloud, n, seed=seed)
    fps = farthest_point_sample(cloud, n, seed=seed)
    assert set(map(tuple, rs.xyz.tolist())) <= pool
    assert set(map(tuple, fps.xyz.tolist())) <= pool
    assert len(rs) == len(fps) == n


def test_jitter_zero_sigma_is_identity():
    cloud = random_cloud(50, 1)
    out = jitter(cloud, sigma=0.0, clip=0.05, seed=4)
    np.testing.assert_array_equal(out.xyz, cloud.xyz)


def test_jitter_respects_clip():
    cloud = random_cloud(500, 2)
    out = jitter(cloud, sigma=0.5, clip=0.06, seed=4)
    assert np.all(np.abs(out.xyz - cloud.xyz) <= 0.06 + 1e-15)


def test_jitter_moment_check():
    cloud = PointCloud(np.zeros((340_000, 3)))
    out = jitter(cloud, sigma=0.02, clip=0.5, seed=8)  # generous clip: pre-clip region
    assert abs(out.xyz.std() - 0.02) / 0.02 < 0.05


def test_tile_grid_arithmetic():
    rng = np.random.default_rng(0)
    xyz = rng.uniform([0, 0, 0], [60, 30, 5], size=(4000, 3))
    xyz[0] = [0, 0, 0]
    xyz[1] = [60, 30, 5]  # pin the exact footprint
    result = tile(PointCloud(xyz), tile_edge=15.0, min_points=1)
    assert len(result.tiles) == 8
    assert sum(len(t.cloud) for t in result.tiles) == 4000
    assert all(t.area_m2 == 225.0 for t in result.tiles)


def test_tile_single_when_edge_covers_footprint():
    cloud = random_cloud(300, 6, scale=10.0)
    result = tile(cloud, tile_edge=100.0, min_points=1)
    assert len(result.tiles) == 1
    assert len(result.tiles[0].cloud) == 300


def test_tile_partition_and_dropping():
    rng = np.random.default_rng(3)
    xyz = np.concatenate([
        rng.uniform([0, 0, 0], [10, 10, 2], size=(500, 3)),
        rng.uniform([30, 0, 0], [31, 1, 2], size=(5, 3)),  # sparse far corner
    ])
    result = tile(PointCloud(xyz), tile_edge=10.0, min_points=50)
    kept = sum(len(t.cloud) for t in result.tiles)
    dropped = sum(c for _, c in result.dropped)
    assert kept + dropped == 505
    assert result.dropped and all(c < 50 for _, c in result.dropped)


def test_tile_rejects_bad_edge():
    with pytest.raises(PointCloudError):
        tile(random_cloud(10, 0), tile_edge=0.0)

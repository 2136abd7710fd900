import numpy as np
import pytest

from forestvol.encoders import (
    DGCNN,
    DGCNNConfig,
    EncoderInputError,
    PointNet,
    PointNetConfig,
    PointNetPP,
    PointNetPPConfig,
    SetAbstractionSpec,
    build_encoder,
    build_from_descriptor,
    canonicalize,
    default_config,
    describe,
)
from forestvol.encoders.common import ball_group, fps_centroids, knn_indices
from gradcheck import assert_gradients_match

N_TOY = 32


def toy_cloud(batch=2, n=N_TOY, seed=0, scale=8.0):
    rng = np.random.default_rng(seed)
    return rng.uniform([0, 0, 0], [scale, scale, scale * 2], size=(batch, n, 3))


def tiny_models(n=N_TOY, seed=3):
    return {
        "pointnet": PointNet(PointNetConfig(
            n_points=n, tnet_mlp=(8, 8), tnet_hidden=8, mlp1=(8,), mlp2=(8, 16), head=(8,)
        ), seed),
        "pointnetpp": PointNetPP(PointNetPPConfig(
            n_points=n,
            levels=(SetAbstractionSpec(12, 3.0, 6, (8,)), SetAbstractionSpec(4, 8.0, 4, (8, 16))),
            global_mlp=(16,), head=(8,),
        ), seed),
        "dgcnn": DGCNN(DGCNNConfig(
            n_points=n, k=4, blocks=((8,), (8,)), aggregate=16, head=(8,)
        ), seed),
    }


# ---------------------------------------------------------------------------
# canonicalization / shared machinery
# ---------------------------------------------------------------------------


def test_canonicalize_centers_and_floors():
    pts = toy_cloud(batch=3, seed=1) + np.array([100.0, -50.0, 20.0])
    out = canonicalize(pts)
    np.testing.assert_allclose(out[:, :, 0].mean(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(out[:, :, 1].mean(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(out[:, :, 2].min(axis=1), 0.0, atol=1e-12)
    # lexicographic order by x
    assert np.all(np.diff(out[0, :, 0]) >= 0)


def test_knn_matches_brute_force():
    pts = canonicalize(toy_cloud(batch=2, n=16, seed=5))
    for k in (1, 3, 7):
        idx = knn_indices(pts, k)
        for b in range(2):
            d2 = ((pts[b][:, None, :] - pts[b][None, :, :]) ** 2).sum(-1)
            np.fill_diagonal(d2, np.inf)
            for i in range(16):
                brute = np.argsort(d2[i], kind="stable")[:k]
                np.testing.assert_array_equal(idx[b, i], brute)


def test_knn_rejects_k_too_large():
    pts = canonicalize(toy_cloud(n=8))
    with pytest.raises(EncoderInputError, match="k=8"):
        knn_indices(pts, 8)


def test_ball_group_within_radius():
    xyz = canonicalize(toy_cloud(batch=2, n=24, seed=2))
    centroids = fps_centroids(xyz, 6)
    radius = 2.5
    groups = ball_group(xyz, centroids, radius=radius, nsample=8)
    rows = np.arange(2)[:, None]
    centers = xyz[rows, centroids]
    for b in range(2):
        for s in range(6):
            members = xyz[b, groups[b, s]]
            d = np.linalg.norm(members - centers[b, s], axis=1)
            assert np.all(d <= radius + 1e-12)


def test_ball_group_isolated_centroid_self_pads():
    xyz = np.zeros((1, 5, 3))
    xyz[0, :4] = np.random.default_rng(0).uniform(0, 1, (4, 3))
    xyz[0, 4] = [100.0, 100.0, 100.0]  # far outlier becomes its own group
    xyz = canonicalize(xyz)
    centroids = fps_centroids(xyz, 2)
    groups = ball_group(xyz, centroids, radius=0.5, nsample=3)
    rows = np.arange(1)[:, None]
    outlier_pos = int(np.argmax(xyz[0, :, 0]))
    for s in range(2):
        if centroids[0, s] == outlier_pos:
            assert np.all(groups[0, s] == outlier_pos)


# ---------------------------------------------------------------------------
# encoder contracts
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("arch", ["pointnet", "pointnetpp", "dgcnn"])
def test_permutation_invariance(arch):
    model = tiny_models()[arch]
    pts = toy_cloud(batch=2, seed=7)
    rng = np.random.default_rng(1)
    out = model.forward(pts).data
    for _ in range(5):
        perm = rng.permutation(N_TOY)
        out_p = model.forward(pts[:, perm, :]).data
        np.testing.assert_allclose(out_p, out, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("arch", ["pointnet", "pointnetpp", "dgcnn"])
def test_translation_invariance_xy(arch):
    model = tiny_models()[arch]
    pts = toy_cloud(batch=2, seed=8)
    out = model.forward(pts).data
    shifted = pts + np.array([123.0, -77.0, 0.0])
    np.testing.assert_allclose(model.forward(shifted).data, out, rtol=1e-9, atol=1e-9)


def test_pointnet_constant_when_head_zeroed():
    cfg = PointNetConfig(n_points=N_TOY, t_net_enabled=False,
                         mlp1=(8,), mlp2=(8, 16), head=(8,))
    model = PointNet(cfg, seed=1)
    model.head.out.weight.data[...] = 0.0
    model.head.out.bias.data[...] = 4.25
    for seed in range(3):
        out = model.forward(toy_cloud(seed=seed)).data
        np.testing.assert_allclose(out, 4.25, atol=1e-12)


def test_forward_deterministic_across_builds():
    pts = toy_cloud(seed=9)
    a = tiny_models(seed=5)["pointnet"].forward(pts).data
    b = tiny_models(seed=5)["pointnet"].forward(pts).data
    np.testing.assert_array_equal(a, b)


def test_wrong_point_count_rejected():
    model = tiny_models()["pointnet"]
    with pytest.raises(EncoderInputError, match="expected"):
        model.forward(toy_cloud(n=N_TOY + 1))


def test_dgcnn_k_must_be_below_point_count():
    cfg = DGCNNConfig(n_points=8, k=8, blocks=((4,),), aggregate=8, head=(4,))
    model = DGCNN(cfg, seed=0)
    with pytest.raises(EncoderInputError, match="k=8"):
        model.forward(toy_cloud(n=8))


def test_pointnetpp_requires_decreasing_centroids():
    with pytest.raises(ValueError, match="strictly decrease"):
        PointNetPPConfig(levels=(
            SetAbstractionSpec(8, 1.0, 4, (8,)), SetAbstractionSpec(8, 2.0, 4, (8,))
        ))


def test_pointnetpp_degenerate_single_level_all_points():
    # centroid count == point count with huge radius: PointNet-like but finite.
    cfg = PointNetPPConfig(
        n_points=16,
        levels=(SetAbstractionSpec(16, 1e6, 16, (8,)),),
        global_mlp=(16,), head=(8,),
    )
    model = PointNetPP(cfg, seed=2)
    out = model.forward(toy_cloud(n=16)).data
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("arch", ["pointnet", "pointnetpp", "dgcnn"])
def test_encoder_gradient_check(arch):
    from forestvol.nn import mean_all, mul

    model = tiny_models()[arch]
    pts = toy_cloud(batch=2, seed=11)
    params = model.named_parameters()
    rng = np.random.default_rng(42)

    def forward():
        return mean_all(mul(model.forward(pts, training=True), 1.7))

    assert_gradients_match(forward, params, rng, rtol=1e-4, atol=1e-6, max_samples=4)


def test_descriptor_roundtrip_rebuilds_identical_model():
    pts = toy_cloud(seed=13)
    for arch in ("pointnet", "pointnetpp", "dgcnn"):
        model = tiny_models(seed=7)[arch]
        rebuilt = build_from_descriptor(model.descriptor(), seed=7)
        np.testing.assert_array_equal(model.forward(pts).data, rebuilt.forward(pts).data)


def test_default_config_factory_and_describe():
    for arch in ("pointnet", "pointnetpp", "dgcnn"):
        model = build_encoder(default_config(arch, n_points=64), seed=0)
        table = describe(model)
        assert "total" in table and "weight" in table
    with pytest.raises(ValueError, match="unknown architecture"):
        default_config("pointconv")

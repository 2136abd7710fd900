import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestvol.mesh import (
    MeshError,
    TriangleMesh,
    check_watertight,
    frustum_volume,
    load_obj,
    make_box,
    make_cylinder,
    make_frustum_stack,
    merge,
    save_obj,
    signed_volume,
    transform,
)


def test_unit_cube_volume_exact():
    assert signed_volume(make_box()) == pytest.approx(1.0, abs=1e-12)


def test_scaled_cube_volume():
    cube = transform(make_box(), scale=2.0)
    assert signed_volume(cube) == pytest.approx(8.0, abs=1e-12)


def test_cylinder_volume_within_tessellation_deficit():
    # Analytic oracle: pi * r^2 * h; the 256-gon underestimates by < 0.5%.
    mesh = make_cylinder(radius=1.0, height=2.0, segments=256)
    exact = np.pi * 1.0**2 * 2.0
    vol = signed_volume(mesh)
    assert vol < exact
    assert abs(vol - exact) / exact < 0.005


def test_watertight_cube():
    report = check_watertight(make_box())
    assert report.watertight
    assert report.boundary_edges == []


def test_cube_with_missing_face_reports_hole():
    cube = make_box()
    open_mesh = TriangleMesh(cube.vertices, cube.faces[:-2], validate=False)
    report = check_watertight(open_mesh)
    assert not report.watertight
    # Removing the two triangles of one quad exposes the quad's 4 rim edges.
    assert len(report.boundary_edges) == 4


def test_single_triangle_three_boundary_edges():
    tri = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    report = check_watertight(tri)
    assert not report.watertight
    assert len(report.boundary_edges) == 3


def test_signed_volume_rejects_open_mesh():
    tri = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    with pytest.raises(MeshError, match="not watertight"):
        signed_volume(tri)


def test_transform_identity_full_turn():
    cube = make_box()
    back = transform(cube, rotation_z=360.0)
    np.testing.assert_allclose(back.vertices, cube.vertices, atol=1e-12)


def test_transform_rotation_90deg():
    m = TriangleMesh(np.array([[1.0, 0.0, 0.0], [0, 1, 0], [0, 0, 1]]), np.array([[0, 1, 2]]))
    r = transform(m, rotation_z=90.0)
    np.testing.assert_allclose(r.vertices[0], [0.0, 1.0, 0.0], atol=1e-12)


def test_transform_rejects_nonpositive_scale():
    with pytest.raises(MeshError, match="scale"):
        transform(make_box(), scale=0.0)


def test_volume_invariant_under_rigid_transform():
    base = make_cylinder(0.7, 3.1, segments=48)
    v0 = signed_volume(base)
    moved = transform(base, rotation_z=73.0, translation=(12.3, -4.5, 6.7))
    assert signed_volume(moved) == pytest.approx(v0, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0, allow_nan=False))
def test_volume_scale_cubed_law(s):
    cube = make_box(size=(1.0, 2.0, 0.5))
    v0 = signed_volume(cube)
    assert signed_volume(transform(cube, scale=s)) == pytest.approx(s**3 * v0, rel=1e-9)


def test_disjoint_union_additivity():
    a = make_box(origin=(0, 0, 0))
    b = make_box(size=(2, 1, 1), origin=(5, 0, 0))
    c = make_cylinder(0.5, 2.0, segments=16)
    scene = merge([a, b, c])
    total = signed_volume(a) + signed_volume(b) + signed_volume(c)
    assert signed_volume(scene) == pytest.approx(total, abs=1e-12)
    scene_reordered = merge([c, a, b])
    assert signed_volume(scene_reordered) == pytest.approx(signed_volume(scene), abs=1e-12)


def test_degenerate_face_rejected():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])  # collinear
    with pytest.raises(MeshError, match="degenerate"):
        TriangleMesh(verts, np.array([[0, 1, 2]]))


def test_face_index_out_of_range_rejected():
    with pytest.raises(MeshError, match="index"):
        TriangleMesh(np.eye(3), np.array([[0, 1, 3]]))


def test_frustum_stack_matches_analytic_formula():
    z = np.array([0.0, 1.5, 3.2, 4.0])
    r = np.array([0.5, 0.4, 0.25, 0.1])
    mesh = make_frustum_stack(z, r, segments=64)
    exact = sum(
        frustum_volume(z[i + 1] - z[i], r[i], r[i + 1]) for i in range(3)
    )
    assert signed_volume(mesh) == pytest.approx(exact, rel=0.005)


def test_frustum_stack_shear_preserves_volume():
    # Horizontal ring offsets shear the solid; volume must not change.
    z = np.array([0.0, 1.0, 2.0])
    r = np.array([0.3, 0.2, 0.1])
    straight = make_frustum_stack(z, r, segments=32)
    sheared = make_frustum_stack(
        z, r, segments=32, ring_centers=np.array([[0, 0], [0.4, -0.2], [0.9, 0.5]])
    )
    assert signed_volume(sheared) == pytest.approx(signed_volume(straight), rel=1e-12)


def test_closed_primitives_always_watertight():
    assert check_watertight(make_box((3, 2, 1))).watertight
    assert check_watertight(make_cylinder(1.0, 1.0, segments=8)).watertight
    z = np.linspace(0, 5, 7)
    r = np.linspace(0.4, 0.05, 7)
    assert check_watertight(make_frustum_stack(z, r, segments=10)).watertight


def test_obj_roundtrip(tmp_path):
    mesh = make_cylinder(0.8, 2.5, segments=12)
    path = tmp_path / "cyl.obj"
    save_obj(mesh, path)
    back = load_obj(path)
    np.testing.assert_array_equal(back.faces, mesh.faces)
    np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=0, atol=0)
    text = path.read_text()
    assert all(line[0] in "vf" for line in text.splitlines())


def test_obj_rejects_unknown_keyword(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nvn 1 0 0\n")
    with pytest.raises(MeshError, match="unsupported"):
        load_obj(path)

import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from oracles import revolved_workspace_volume_cm3
from tendonhand.errors import InvalidArgumentError
from tendonhand.kinematics import FingerGeometry, closure_residuals, default_hand, inverse_kinematics, rot_z
from tendonhand.workspace import (WorkspaceCloud, estimate_volume, finger_volume, hand_workspace,
                                  joint_grid, sample_workspace, write_csv, write_ply)

G = FingerGeometry()


def test_two_samples_per_joint_give_corners():
    cloud = sample_workspace(G, 2)
    assert len(cloud) == 8
    assert np.all(np.linalg.norm(cloud.points, axis=1) <= 92 + 1e-9)


def test_resolution_below_two_rejected():
    with pytest.raises(InvalidArgumentError):
        sample_workspace(G, 1)


def test_refined_grid_contains_base_grid():
    base = joint_grid(G, 10)
    fine = joint_grid(G, 10, max_spacing=1.0)
    for b, f in zip(base, fine):
        assert all(np.isclose(f, v).any() for v in b)


def test_refined_grid_step_bounded_by_spacing():
    arms = [92.0, 76.0, 44.0]
    for axis, arm in zip(joint_grid(G, 50, max_spacing=1.0), arms):
        assert arm * np.max(np.diff(axis)) <= 1.0 + 1e-12


def test_points_are_consistent_with_ik():
    cloud = sample_workspace(G, 7)
    pts = cloud.points[np.hypot(cloud.points[:, 0], cloud.points[:, 1]) > 1e-6]
    th = inverse_kinematics(G, pts, check_limits=False).theta
    assert np.max(np.abs(closure_residuals(G, th, pts))) <= 1e-9


def test_halton_is_seeded():
    a = sample_workspace(G, 10, method="halton", seed=3).points
    b = sample_workspace(G, 10, method="halton", seed=3).points
    c = sample_workspace(G, 10, method="halton", seed=4).points
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_unknown_method_rejected():
    with pytest.raises(InvalidArgumentError):
        sample_workspace(G, 5, method="sobol")


def test_single_point_is_one_voxel():
    assert estimate_volume(np.array([[0.3, 0.3, 0.3]]), 2.0) == pytest.approx(8e-3)


def test_voxel_centred_box():
    g = np.arange(10) + 0.5
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    assert estimate_volume(pts, 1.0) == pytest.approx(1.0)


def test_empty_cloud_warns_and_returns_zero(caplog):
    with caplog.at_level(logging.WARNING):
        assert estimate_volume(np.zeros((0, 3)), 1.0) == 0.0
    assert "empty" in caplog.text


def test_bad_voxel_rejected():
    with pytest.raises(InvalidArgumentError):
        estimate_volume(np.zeros((1, 3)), 0.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 400))
@settings(max_examples=25)
def test_volume_monotone_in_sample_count(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-5, 5, size=(n + 50, 3))
    assert estimate_volume(pts[:n], 1.0) <= estimate_volume(pts, 1.0)


def test_volume_order_independent():
    cloud = sample_workspace(G, 12)
    perm = np.random.default_rng(0).permutation(len(cloud))
    assert estimate_volume(cloud.points, 1.0) == estimate_volume(cloud.points[perm], 1.0)


def test_voxel_volume_converges_to_revolved_volume():
    """Occupancy over-counts by about half a voxel of surface; the excess shrinks with the voxel."""
    exact = revolved_workspace_volume_cm3()
    v2, _ = finger_volume(G, 50, 2.0)
    v1, _ = finger_volume(G, 50, 1.0)
    assert exact < v1 < v2
    assert 1.7 <= (v2 - exact) / (v1 - exact) <= 2.3


def test_refinement_study():
    v50, _ = finger_volume(G, 50, 1.0)
    v60, _ = finger_volume(G, 60, 1.0)
    assert abs(v60 - v50) / v50 <= 0.02


def test_volume_is_deterministic():
    assert finger_volume(G, 30, 1.0)[0] == finger_volume(G, 30, 1.0)[0]


def _within_voxel(points, cloud_points, voxel):
    d, _ = cKDTree(cloud_points).query(points)
    return np.max(d) <= voxel


def test_reflection_about_finger_plane_maps_cloud_onto_itself():
    pts = sample_workspace(G, 20, max_spacing=2.0).points
    assert _within_voxel(pts * [1, -1, 1], pts, 2.0)


@pytest.mark.parametrize("delta_deg", [5.0, 15.0, 30.0])
def test_mcp1_rotation_maps_cloud_onto_itself(delta_deg):
    """Rotating by delta about the MCP1 axis keeps every point whose MCP1 angle stays in range."""
    geom = FingerGeometry(joint_limits=((-30 * np.pi / 180, (30 - delta_deg) * np.pi / 180),
                                        (0, np.pi / 2), (0, np.pi / 2)))
    moved = sample_workspace(geom, 20, max_spacing=2.0).points @ rot_z(np.radians(delta_deg))[:3, :3].T
    cloud = sample_workspace(G, 20, max_spacing=2.0).points
    assert _within_voxel(moved, cloud, 2.0)


def test_hand_workspace_volumes_and_export(tmp_path):
    ws = hand_workspace(default_hand(), resolution=8, voxel=2.0)
    assert list(ws.volume_cm3) == ["thumb", "index", "middle", "ring", "little"]
    assert len(set(ws.volume_cm3.values())) == 1
    assert np.bincount(ws.finger).tolist() == [len(ws) // 5] * 5
    # the index fingertip cloud is the finger-frame cloud shifted by its mount
    own = sample_workspace(G, 8, max_spacing=2.0).points
    np.testing.assert_allclose(ws.points[ws.finger == 1], own + [0, 30, 0])

    csv, ply = tmp_path / "w.csv", tmp_path / "w.ply"
    write_csv(ws, csv)
    write_ply(ws, ply)
    rows = csv.read_text().splitlines()
    assert rows[0] == "x,y,z,finger_id" and len(rows) == len(ws) + 1
    head = ply.read_text().split("end_header\n")[0]
    assert f"element vertex {len(ws)}" in head


def test_cloud_type():
    c = WorkspaceCloud(points=np.zeros((3, 3)), finger=np.zeros(3, dtype=int))
    assert len(c) == 3

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import central_difference_jacobian, fingertip_by_transform_chain
from tendonhand.errors import InvalidArgumentError, ReachabilityError, SingularTargetError
from tendonhand.kinematics import (FingerGeometry, closure_residuals, default_hand, fingertip_positions,
                                   forward_kinematics, inverse_kinematics, jacobian, screw_exp)

DEG = np.pi / 180
G = FingerGeometry()

in_limits = st.tuples(
    st.floats(-30 * DEG, 30 * DEG),
    st.floats(0, 90 * DEG),
    st.floats(0, 90 * DEG),
).map(np.array)


def test_home_pose_is_straight_finger():
    fp = forward_kinematics(G, [0, 0, 0])
    np.testing.assert_array_equal(fp.position, [92, 0, 0])
    np.testing.assert_array_equal(fp.orientation, np.eye(3))


def test_default_lengths_sum_to_finger_length():
    assert G.L1 + G.L2 + G.L3 == 92.0


def test_screw_axes_are_unit_and_mcp_axes_orthogonal():
    S = G.screw_axes
    np.testing.assert_allclose(np.linalg.norm(S[:, :3], axis=1), 1.0)
    assert S[0, :3] @ S[1, :3] == 0.0


def test_mcp2_at_ninety_matches_transform_chain():
    theta = [0, 90 * DEG, 0]
    np.testing.assert_allclose(forward_kinematics(G, theta).position,
                               fingertip_by_transform_chain(theta), atol=1e-12)
    np.testing.assert_allclose(forward_kinematics(G, theta).position, [16, 0, 76], atol=1e-12)


def test_mcp1_rotation_keeps_finger_in_its_plane():
    p = forward_kinematics(G, [30 * DEG, 0, 0]).position
    s1, c1 = np.sin(30 * DEG), np.cos(30 * DEG)
    assert abs(p[0] * s1 - p[1] * c1) < 1e-12


@given(in_limits)
def test_fk_matches_transform_chain(theta):
    np.testing.assert_allclose(forward_kinematics(G, theta).position,
                               fingertip_by_transform_chain(theta), atol=1e-10)


@given(in_limits)
def test_fast_positions_match_full_fk(theta):
    np.testing.assert_allclose(fingertip_positions(G, theta),
                               forward_kinematics(G, theta).position, atol=1e-10)


@given(in_limits)
def test_closure_residuals_vanish(theta):
    r = closure_residuals(G, theta, forward_kinematics(G, theta).position)
    assert np.max(np.abs(r)) <= 1e-9


@given(in_limits)
def test_orientation_is_rotation(theta):
    R = forward_kinematics(G, theta).orientation
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)


def test_batched_fk_matches_single():
    rng = np.random.default_rng(0)
    th = rng.uniform(G.limits[:, 0], G.limits[:, 1], size=(20, 3))
    batch = forward_kinematics(G, th).position
    for t, p in zip(th, batch):
        np.testing.assert_allclose(p, forward_kinematics(G, t).position, atol=1e-12)


def test_screw_exp_zero_angle_is_identity():
    for S in G.screw_axes:
        np.testing.assert_array_equal(screw_exp(S, 0.0), np.eye(4))


@pytest.mark.parametrize("bad", [[np.nan, 0, 0], [0, np.inf, 0]])
def test_non_finite_angles_rejected(bad):
    with pytest.raises(InvalidArgumentError):
        forward_kinematics(G, bad)


def test_wrong_angle_count_rejected():
    with pytest.raises(InvalidArgumentError):
        forward_kinematics(G, [0, 0])


@pytest.mark.parametrize("kw", [{"L1": 0}, {"L2": -1}, {"L3": np.nan}])
def test_bad_lengths_rejected(kw):
    with pytest.raises(InvalidArgumentError):
        FingerGeometry(**kw)


def test_dip_active_adds_a_joint():
    g = FingerGeometry(dip_active=True)
    assert g.dof == 4
    np.testing.assert_allclose(forward_kinematics(g, [0, 0, 0, 0]).position, [92, 0, 0])
    # bending only the DIP swings the last 20 mm
    np.testing.assert_allclose(forward_kinematics(g, [0, 0, 0, 90 * DEG]).position, [72, 0, 20], atol=1e-12)


# --- inverse kinematics -------------------------------------------------------

def test_ik_of_home_is_zero():
    np.testing.assert_allclose(inverse_kinematics(G, [92, 0, 0]).theta, 0.0, atol=1e-12)


@given(st.tuples(st.floats(-30 * DEG, 30 * DEG), st.floats(1 * DEG, 89 * DEG),
                 st.floats(1 * DEG, 89 * DEG)).map(np.array))
def test_ik_round_trip(theta):
    p = forward_kinematics(G, theta).position
    np.testing.assert_allclose(inverse_kinematics(G, p).theta, theta, atol=1e-9)


def test_ik_outside_sphere_is_unreachable():
    with pytest.raises(ReachabilityError) as exc:
        inverse_kinematics(G, [92.001, 0, 0])
    assert exc.value.constraint == "reach"


def test_ik_reports_violated_joint_limit():
    with pytest.raises(ReachabilityError) as exc:
        inverse_kinematics(G, [82, 0, -20])
    assert exc.value.constraint.startswith("joint_limit:")


def test_ik_without_limit_check_returns_out_of_box_solution():
    p = fingertip_by_transform_chain([0, -10 * DEG, 30 * DEG])
    th = inverse_kinematics(G, p, check_limits=False).theta
    np.testing.assert_allclose(th, [0, -10 * DEG, 30 * DEG], atol=1e-9)


def test_ik_on_mcp1_axis_is_singular():
    with pytest.raises(SingularTargetError):
        inverse_kinematics(G, [0, 0, 50])


def test_ik_needs_locked_dip():
    with pytest.raises(InvalidArgumentError):
        inverse_kinematics(FingerGeometry(dip_active=True), [80, 0, 10])


def test_ik_batched():
    th = np.radians([[0, 30, 30], [20, 60, 10], [-25, 5, 80]])
    np.testing.assert_allclose(inverse_kinematics(G, fingertip_positions(G, th)).theta, th, atol=1e-9)


# --- jacobian -------------------------------------------------------------------

def test_jacobian_at_home():
    J = jacobian(G, [0, 0, 0])
    np.testing.assert_allclose(J[:, 0], [0, 92, 0], atol=1e-12)
    np.testing.assert_allclose(J[:, 1], [0, 0, 76], atol=1e-12)
    np.testing.assert_allclose(J[:, 2], [0, 0, 44], atol=1e-12)


@given(in_limits)
def test_jacobian_matches_central_differences(theta):
    J = jacobian(G, theta)
    Jn = central_difference_jacobian(lambda t: fingertip_by_transform_chain(t), theta)
    assert np.linalg.norm(J - Jn) / np.linalg.norm(Jn) <= 1e-5


@given(in_limits)
def test_jacobian_columns_bounded_by_reach(theta):
    assert np.all(np.linalg.norm(jacobian(G, theta), axis=0) <= G.reach + 1e-9)


def test_hand_fingertips_apply_mounts():
    hand = default_hand()
    tips = hand.fingertips(np.zeros(15))
    np.testing.assert_allclose(tips[1], [92, 30, 0])
    # thumb points along +y from its mount
    np.testing.assert_allclose(tips[0], [-55, 45 + 92, 0], atol=1e-12)


def test_hand_needs_five_fingers():
    with pytest.raises(InvalidArgumentError):
        type(default_hand())(fingers=[G] * 4, mounts=[np.eye(4)] * 4)

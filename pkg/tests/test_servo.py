import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from pruneservo.camera import MountTransform, camera_pose, project, unproject
from pruneservo.harness.config import DEFAULT_INITIAL_JOINTS
from pruneservo.kinematics import IkConfig, Pose, so3_log
from pruneservo.servo import (
    ControlGains,
    Rig,
    ServoConfig,
    Status,
    command_axes,
    control_law,
    desired_pose,
    initial_state,
    pixel_error,
    run_servo,
    servo_step,
)
from pruneservo.tracker import IdealTracker, NoisyTracker, TrackedPoint, TrackerNoiseModel

RIG = Rig()
Q0 = np.array(DEFAULT_INITIAL_JOINTS)
CAM0 = RIG.camera(Q0)
# a start pose with a straight 1 m line of sight ahead that stays reachable
Q_LONG = np.array([-2.228, -1.784, -1.302, 3.086, 2.485, 3.142])


def target_at(du, dv, depth, cam=CAM0):
    return unproject(320.0 + du, 240.0 + dv, depth, cam)


def tp(u, v):
    return TrackedPoint(u, v, True, 1.0)


# -- pixel error and control law -----------------------------------------------


def test_pixel_error_examples():
    np.testing.assert_array_equal(pixel_error(tp(320, 240)), [0, 0])
    np.testing.assert_array_equal(pixel_error(tp(420, 240)), [-100, 0])
    e = pixel_error(tp(317, 244))
    np.testing.assert_array_equal(e, [3, -4])
    assert np.linalg.norm(e) == 5.0


def test_control_law_examples():
    np.testing.assert_array_equal(control_law([0, 0], ControlGains(dy_forward=0.005)), [0, 0.005, 0])
    assert control_law([-100, 0], ControlGains(kp_x=0.001))[0] == pytest.approx(-0.1)
    assert control_law([0, 50], ControlGains(kp_z=0.001))[2] == pytest.approx(0.05)


def test_gains_validation():
    with pytest.raises(ValueError):
        ControlGains(kp_x=-1e-4)
    with pytest.raises(ValueError):
        ControlGains(dy_forward=0.0)
    with pytest.raises(ValueError):
        ServoConfig(stop_depth=0.0)


@given(st.floats(-400, 400), st.floats(-400, 400))
def test_command_signs_follow_error(ex, ey):
    cmd = control_law([ex, ey])
    # products may underflow to zero but never flip sign
    assert np.sign(cmd[0]) * np.sign(ex) >= 0
    assert np.sign(cmd[2]) * np.sign(ey) >= 0
    assert cmd[1] > 0


# -- desired pose -----------------------------------------------------------------


def test_desired_pose_zero_delta():
    start = RIG.flange(Q0)
    out = desired_pose(start, [0, 0, 0])
    np.testing.assert_array_equal(out.position, start.position)
    np.testing.assert_array_equal(out.rotation, start.rotation)


def test_desired_pose_lateral_axis():
    start = RIG.flange(Q0)
    out = desired_pose(start, [0.1, 0, 0])
    lateral = command_axes(camera_pose(start))[:, 0]
    np.testing.assert_allclose(out.position - start.position, 0.1 * lateral, atol=1e-15)
    np.testing.assert_array_equal(out.rotation, start.rotation)


def test_desired_pose_rotated_camera():
    Rz = Rotation.from_euler("z", 90, degrees=True).as_matrix()
    start = Pose([0.2, 0.1, 0.4], Rz)
    out = desired_pose(start, [0.1, 0, 0])
    # lateral is -x of the camera; x_cam = Rz e_x = world +y
    np.testing.assert_allclose(out.position - start.position, [0, -0.1, 0], atol=1e-15)
    out = desired_pose(start, [0, 0.2, 0.3])
    np.testing.assert_allclose(out.position - start.position, Rz @ [0, -0.3, 0.2], atol=1e-15)


def test_desired_pose_respects_mount():
    mount = MountTransform(Pose([0, 0, 0.05], Rotation.from_euler("z", 0.5).as_matrix()))
    start = RIG.flange(Q0)
    cam = camera_pose(start, mount)
    out = desired_pose(start, [0.01, 0.02, 0.03], mount)
    expected = cam.rotation @ np.array([-0.01, -0.03, 0.02])
    np.testing.assert_allclose(out.position - start.position, expected, atol=1e-15)


# -- single step --------------------------------------------------------------------


def test_step_stops_inside_stop_depth():
    target = target_at(0, 0, 0.19)
    state = initial_state(Q0)
    new, status, rec = servo_step(state, target, IdealTracker((320, 240)))
    assert status is Status.DEPTH_REACHED and not rec.moved
    np.testing.assert_array_equal(new.joints, Q0)
    assert new.cycle == 0


def test_step_on_axis_advances_forward():
    target = target_at(0, 0, 0.6)
    state = initial_state(Q0)
    new, status, _ = servo_step(state, target, IdealTracker((320, 240)))
    assert status is Status.RUNNING and new.cycle == 1
    move = RIG.camera(new.joints).position - CAM0.position
    axes = command_axes(CAM0)
    assert move @ axes[:, 1] == pytest.approx(5e-3, abs=1e-4)
    # IK stops within 1e-4 m, so the sideways residual is bounded well below that
    assert abs(move @ axes[:, 0]) < 1e-5 and abs(move @ axes[:, 2]) < 1e-5


def test_step_reduces_error_for_offset_target():
    target = target_at(100, 0, 0.6)
    state = initial_state(Q0)
    new, status, _ = servo_step(state, target, IdealTracker((420, 240)))
    after = project(target, RIG.camera(new.joints))
    assert status is Status.RUNNING
    assert math.hypot(after.u - 320, after.v - 240) < 100


def test_ik_failure_is_reported_without_motion():
    rig = Rig(ik=IkConfig(max_iterations=3))
    target = target_at(200, 0, 0.6)
    state = initial_state(Q0, rig)
    new, status, rec = servo_step(state, target, IdealTracker((520, 240)), ServoConfig(), rig)
    assert status is Status.IK_FAILURE and not rec.moved
    np.testing.assert_array_equal(new.joints, Q0)


# -- full runs ---------------------------------------------------------------------


def _pixel_norms(traj):
    return np.array([np.linalg.norm(r.pixel_error) for r in traj.records])


def test_axial_approach_one_metre():
    cam = RIG.camera(Q_LONG)
    target = cam.position + 1.0 * cam.rotation[:, 2]
    traj = run_servo(Q_LONG, target, IdealTracker((320, 240)))
    assert traj.termination is Status.DEPTH_REACHED
    assert _pixel_norms(traj)[-1] < 1.0


def test_max_offset_with_noisy_tracker():
    # 350 px off-centre, the protocol's largest offset, towards a corner
    du, dv = 350 * math.cos(0.6), 350 * math.sin(0.6)
    target = target_at(du, dv, 0.6)
    tracker = NoisyTracker((320 + du, 240 + dv), TrackerNoiseModel(seed=4))
    traj = run_servo(Q0, target, tracker)
    assert traj.termination is Status.DEPTH_REACHED
    assert len(traj.records) <= ServoConfig().max_cycles
    assert _pixel_norms(traj)[-1] < 15.0


def test_zero_lateral_gain_never_converges():
    target = target_at(200, 0, 0.6)
    cfg = ServoConfig(gains=ControlGains(kp_x=0.0, kp_z=0.0))
    traj = run_servo(Q0, target, IdealTracker((520, 240)), cfg)
    assert traj.termination in (Status.TRACK_LOST, Status.CYCLE_BUDGET)
    assert _pixel_norms(traj)[-1] > 15.0


@pytest.mark.parametrize("du, dv, depth", [(350 * math.cos(2.5), 350 * math.sin(2.5), 0.7), (-60, 30, 0.45), (200, 200, 0.55)])
def test_ideal_convergence_is_monotone(du, dv, depth):
    target = target_at(du, dv, depth)
    traj = run_servo(Q0, target, IdealTracker((320 + du, 240 + dv)))
    assert traj.termination is Status.DEPTH_REACHED
    norms = _pixel_norms(traj)[5:]
    assert np.all(np.diff(norms) <= 1.0)


def test_orientation_and_stop_invariants():
    target = target_at(-250, 120, 0.65)
    traj = run_servo(Q0, target, NoisyTracker((70, 360), TrackerNoiseModel(seed=8)))
    R0 = RIG.flange(Q0).rotation
    tol = RIG.ik.orientation_tolerance
    for i, rec in enumerate(traj.records):
        drift = np.linalg.norm(so3_log(RIG.flange(rec.joints).rotation @ R0.T))
        assert drift < tol * (i + 1)
    first_close = next(i for i, r in enumerate(traj.records) if r.depth < 0.2)
    assert not any(r.moved for r in traj.records[first_close:])
    assert first_close == len(traj.records) - 1


def test_run_is_deterministic():
    target = target_at(150, -90, 0.5)

    def run():
        t = NoisyTracker((470, 150), TrackerNoiseModel(seed=12, occlusion_probability=0.2))
        return run_servo(Q0, target, t)

    a, b = run(), run()
    assert a.termination == b.termination and len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert ra.tracked == rb.tracked
        np.testing.assert_array_equal(ra.joints, rb.joints)


def test_cycle_budget():
    target = target_at(0, 0, 0.6)
    traj = run_servo(Q0, target, IdealTracker((320, 240)), ServoConfig(max_cycles=3))
    assert traj.termination is Status.CYCLE_BUDGET
    assert len(traj.records) == 3 and traj.final_state.cycle == 3

"""Image-based visual servoing loop.

Each cycle: project the target through the current camera pose, update the
tracker, turn the pixel error into a proportional Cartesian increment plus a
constant forward advance, hold the orientation, and solve IK from the
current joints. The loop stops once the target is closer than ``stop_depth``
along the optical axis.

Command frame: the increment (dx, dy, dz) is expressed along the camera's
lateral (-x_cam, image-left), forward (+z_cam) and vertical (-y_cam,
image-up) axes. With that basis a target right of centre (negative e_x)
commands a negative dx, which moves the camera towards image-right and
recentres the target.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .camera import CameraIntrinsics, MountTransform, Projection, camera_pose, project
from .kinematics import (
    UR5E_DH,
    IkConfig,
    JointLimits,
    Pose,
    forward_kinematics,
    solve_ik,
)
from .tracker import IdealTracker, TrackedPoint


class Status(str, enum.Enum):
    RUNNING = "Running"
    DEPTH_REACHED = "DepthReached"
    CYCLE_BUDGET = "CycleBudget"
    TRACK_LOST = "TrackLost"
    IK_FAILURE = "IkFailure"


@dataclass(frozen=True)
class ControlGains:
    kp_x: float = 5e-4
    kp_z: float = 5e-4
    dy_forward: float = 5e-3

    def __post_init__(self):
        # zero lateral gains are allowed for open-loop ablations
        if not (self.kp_x >= 0 and self.kp_z >= 0 and self.dy_forward > 0):
            raise ValueError("gains must be non-negative and dy_forward positive")


@dataclass(frozen=True)
class ServoConfig:
    stop_depth: float = 0.20
    max_cycles: int = 500
    gains: ControlGains = field(default_factory=ControlGains)
    # cutting-tool tip distance along the optical axis; None means stop_depth
    tool_offset: Optional[float] = None
    lost_patience: int = 10

    def __post_init__(self):
        if not (self.stop_depth > 0 and self.max_cycles > 0 and self.lost_patience >= 0):
            raise ValueError("invalid servo configuration")

    @property
    def tool_length(self) -> float:
        return self.stop_depth if self.tool_offset is None else self.tool_offset


@dataclass(frozen=True)
class Rig:
    """The fixed hardware description: arm, joint limits, camera and mount."""

    dh: np.ndarray = field(default_factory=lambda: UR5E_DH.copy())
    limits: JointLimits = field(default_factory=JointLimits)
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    mount: MountTransform = field(default_factory=MountTransform)
    ik: IkConfig = field(default_factory=IkConfig)

    def flange(self, q) -> Pose:
        return forward_kinematics(q, self.dh)

    def camera(self, q) -> Pose:
        return camera_pose(self.flange(q), self.mount)

    def tool_point(self, q, tool_length: float) -> np.ndarray:
        cam = self.camera(q)
        return cam.position + tool_length * cam.rotation[:, 2]


@dataclass(frozen=True)
class ServoState:
    joints: np.ndarray
    cycle: int
    last_tracked: Optional[TrackedPoint]
    last_depth: float
    flange_pose: Pose
    lost_cycles: int = 0


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    tracked: TrackedPoint
    pixel_error: np.ndarray
    depth: float
    flange_position: np.ndarray
    joints: np.ndarray
    moved: bool


@dataclass
class Trajectory:
    records: list[CycleRecord] = field(default_factory=list)
    termination: Optional[Status] = None
    final_state: Optional[ServoState] = None


def initial_state(q, rig: Rig = Rig()) -> ServoState:
    q = np.array(q, dtype=float)
    return ServoState(q, 0, None, float("nan"), rig.flange(q))


def pixel_error(tracked: TrackedPoint, k: CameraIntrinsics = CameraIntrinsics()) -> np.ndarray:
    return np.array([k.cx - tracked.u, k.cy - tracked.v])


def control_law(e, gains: ControlGains = ControlGains()) -> np.ndarray:
    """Proportional increment (dx, dy, dz) in metres; dy is always the
    forward advance."""
    e = np.asarray(e, dtype=float)
    return np.array([gains.kp_x * e[0], gains.dy_forward, gains.kp_z * e[1]])


def command_axes(camera: Pose) -> np.ndarray:
    """World directions of the lateral, forward and vertical command axes
    (as columns)."""
    R = camera.rotation
    return np.column_stack([-R[:, 0], R[:, 2], -R[:, 1]])


def desired_pose(current: Pose, delta, mount: MountTransform = MountTransform()) -> Pose:
    """Flange pose displaced by ``delta`` along the camera command axes,
    orientation held."""
    cam = camera_pose(current, mount)
    shift = command_axes(cam) @ np.asarray(delta, dtype=float)
    return Pose(current.position + shift, current.rotation)


def servo_step(
    state: ServoState,
    target,
    tracker: IdealTracker,
    config: ServoConfig = ServoConfig(),
    rig: Rig = Rig(),
) -> tuple[ServoState, Status, CycleRecord]:
    """Run one control cycle. Motion is only issued on a ``RUNNING`` status."""
    cam = camera_pose(state.flange_pose, rig.mount)
    proj: Projection = project(target, cam, rig.intrinsics)
    tracked = tracker.update(proj)
    e = pixel_error(tracked, rig.intrinsics)
    lost = state.lost_cycles + 1 if (not tracked.visible and not proj.in_frame) else 0
    observed = replace(state, last_tracked=tracked, last_depth=proj.depth, lost_cycles=lost)

    def record(moved_state: ServoState, moved: bool) -> CycleRecord:
        return CycleRecord(
            state.cycle,
            tracked,
            e,
            proj.depth,
            moved_state.flange_pose.position.copy(),
            moved_state.joints.copy(),
            moved,
        )

    if 0.0 < proj.depth < config.stop_depth:
        return observed, Status.DEPTH_REACHED, record(observed, False)
    if lost > config.lost_patience:
        return observed, Status.TRACK_LOST, record(observed, False)

    goal = desired_pose(state.flange_pose, control_law(e, config.gains), rig.mount)
    ik = solve_ik(state.joints, goal, rig.ik, rig.dh, rig.limits)
    if not ik.converged:
        return observed, Status.IK_FAILURE, record(observed, False)

    moved = replace(observed, joints=ik.joints, cycle=state.cycle + 1, flange_pose=rig.flange(ik.joints))
    return moved, Status.RUNNING, record(moved, True)


def run_servo(
    q_init,
    target,
    tracker: IdealTracker,
    config: ServoConfig = ServoConfig(),
    rig: Rig = Rig(),
) -> Trajectory:
    state = initial_state(q_init, rig)
    traj = Trajectory()
    status = Status.RUNNING
    while state.cycle < config.max_cycles:
        state, status, rec = servo_step(state, target, tracker, config, rig)
        traj.records.append(rec)
        if status is not Status.RUNNING:
            break
    else:
        status = Status.CYCLE_BUDGET
    traj.termination = status
    traj.final_state = state
    return traj

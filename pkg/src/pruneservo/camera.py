"""Pinhole camera rigidly mounted on the flange (eye-in-hand)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import Pose


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 615.0
    fy: float = 615.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def contains(self, u: float, v: float) -> bool:
        return 0.0 <= u < self.width and 0.0 <= v < self.height


@dataclass(frozen=True)
class MountTransform:
    """Camera frame expressed in the flange frame. The default aligns the
    optical axis with the flange approach (z) axis at zero offset."""

    pose: Pose = field(default_factory=Pose.identity)


@dataclass(frozen=True)
class Projection:
    pixel: tuple[float, float]
    depth: float
    in_frame: bool

    @property
    def u(self) -> float:
        return self.pixel[0]

    @property
    def v(self) -> float:
        return self.pixel[1]


def camera_pose(flange: Pose, mount: MountTransform = MountTransform()) -> Pose:
    return flange.compose(mount.pose)


def to_camera_frame(point_world, camera: Pose) -> np.ndarray:
    p = np.asarray(point_world, dtype=float).reshape(3)
    return camera.rotation.T @ (p - camera.position)


def depth_of(point_world, camera: Pose) -> float:
    """Optical-axis coordinate of a world point in the camera frame."""
    return float(to_camera_frame(point_world, camera)[2])


def project(point_world, camera: Pose, k: CameraIntrinsics = CameraIntrinsics()) -> Projection:
    X, Y, Z = to_camera_frame(point_world, camera)
    if Z <= 0.0:
        # behind the camera: there is no image of the point
        return Projection((math.nan, math.nan), float(Z), False)
    u = k.cx + k.fx * X / Z
    v = k.cy + k.fy * Y / Z
    return Projection((float(u), float(v)), float(Z), bool(k.contains(u, v)))


def unproject(u: float, v: float, depth: float, camera: Pose, k: CameraIntrinsics = CameraIntrinsics()) -> np.ndarray:
    """World point seen at pixel (u, v) with optical-axis depth ``depth``."""
    local = np.array([(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth])
    return camera.position + camera.rotation @ local

"""Flat ``key = value`` configuration for trial runs.

Blank lines and ``#`` comments are ignored. Vector values are comma
separated; ``none`` clears an optional value.
"""
from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..camera import CameraIntrinsics, MountTransform
from ..kinematics import UR5E_DH, IkConfig, JointLimits, Pose
from ..servo import ControlGains, Rig, ServoConfig
from ..tracker import TrackerNoiseModel

Vec = tuple[float, ...]

# folded-elbow start: camera looks along world +x, image-down is world -z
DEFAULT_INITIAL_JOINTS: Vec = (2.4139, -1.4221, 2.7701, 1.7936, -0.8431, 0.0)


class ConfigError(ValueError):
    pass


def _col(i: int) -> Vec:
    return tuple(float(v) for v in UR5E_DH[:, i])


@dataclass
class HarnessConfig:
    trials: int = 40
    seed: int = 42
    tracker: str = "noisy"
    workers: int = 1

    pixel_sigma: float = 2.0
    occlusion_probability: float = 0.02
    occlusion_duration_mean: float = 3.0
    hold_last: bool = False

    kp_x: float = 5e-4
    kp_z: float = 5e-4
    dy_forward: float = 5e-3
    stop_depth: float = 0.20
    max_cycles: int = 500
    tool_offset: float = 0.20
    lost_patience: int = 10

    fx: float = 615.0
    fy: float = 615.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480
    mount_xyz: Vec = (0.0, 0.0, 0.0)
    mount_rpy: Vec = (0.0, 0.0, 0.0)

    dh_a: Vec = field(default_factory=lambda: _col(0))
    dh_alpha: Vec = field(default_factory=lambda: _col(1))
    dh_d: Vec = field(default_factory=lambda: _col(2))
    dh_theta_offset: Vec = field(default_factory=lambda: _col(3))
    joint_lower: Vec = (-2 * math.pi,) * 6
    joint_upper: Vec = (2 * math.pi,) * 6
    wrist_excursion: float = math.pi

    ik_damping: float = 1e-4
    ik_max_iterations: int = 1000
    ik_position_tolerance: float = 1e-4
    ik_orientation_tolerance: float = 1e-3
    ik_step_clamp: float = 0.1
    ik_singularity_threshold: float = 1e-6
    ik_step_base: float = 0.01
    ik_step_min: float = 0.001
    ik_step_max: float = 0.05
    ik_jacobian_perturbation: float = 1e-6

    initial_joints: Vec = DEFAULT_INITIAL_JOINTS
    depth_min: float = 0.45
    depth_max: float = 0.70
    offset_min_px: float = 50.0
    offset_max_px: float = 350.0
    workspace_min: Optional[Vec] = None
    workspace_max: Optional[Vec] = None

    histogram_bin_mm: float = 1.0

    def __post_init__(self):
        if self.trials <= 0:
            raise ConfigError("trials must be positive")
        if self.tracker not in ("ideal", "noisy"):
            raise ConfigError(f"tracker must be 'ideal' or 'noisy', got {self.tracker!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.depth_min <= self.depth_max:
            raise ConfigError("need 0 < depth_min <= depth_max")
        if not 0 <= self.offset_min_px <= self.offset_max_px:
            raise ConfigError("need 0 <= offset_min_px <= offset_max_px")
        if self.histogram_bin_mm <= 0:
            raise ConfigError("histogram_bin_mm must be positive")
        for name in ("dh_a", "dh_alpha", "dh_d", "dh_theta_offset", "joint_lower", "joint_upper", "initial_joints"):
            if len(getattr(self, name)) != 6:
                raise ConfigError(f"{name} needs 6 values")
        for name in ("mount_xyz", "mount_rpy"):
            if len(getattr(self, name)) != 3:
                raise ConfigError(f"{name} needs 3 values")
        for name in ("workspace_min", "workspace_max"):
            value = getattr(self, name)
            if value is not None and len(value) != 3:
                raise ConfigError(f"{name} needs 3 values")

    # -- builders ---------------------------------------------------------

    def dh(self) -> np.ndarray:
        return np.column_stack([self.dh_a, self.dh_alpha, self.dh_d, self.dh_theta_offset]).astype(float)

    def rig(self) -> Rig:
        mount = MountTransform(Pose(np.array(self.mount_xyz), Rotation.from_euler("xyz", self.mount_rpy).as_matrix()))
        return Rig(
            dh=self.dh(),
            limits=JointLimits(np.array(self.joint_lower), np.array(self.joint_upper), self.wrist_excursion),
            intrinsics=CameraIntrinsics(self.fx, self.fy, self.cx, self.cy, self.width, self.height),
            mount=mount,
            ik=IkConfig(
                damping=self.ik_damping,
                max_iterations=self.ik_max_iterations,
                position_tolerance=self.ik_position_tolerance,
                orientation_tolerance=self.ik_orientation_tolerance,
                step_clamp=self.ik_step_clamp,
                singularity_threshold=self.ik_singularity_threshold,
                step_base=self.ik_step_base,
                step_min=self.ik_step_min,
                step_max=self.ik_step_max,
                jacobian_perturbation=self.ik_jacobian_perturbation,
            ),
        )

    def gains(self) -> ControlGains:
        return ControlGains(self.kp_x, self.kp_z, self.dy_forward)

    def servo(self) -> ServoConfig:
        return ServoConfig(self.stop_depth, self.max_cycles, self.gains(), self.tool_offset, self.lost_patience)

    def noise(self, seed: int = 0) -> TrackerNoiseModel:
        return TrackerNoiseModel(
            self.pixel_sigma, self.occlusion_probability, self.occlusion_duration_mean, seed, self.hold_last
        )

    def replace(self, **changes) -> "HarnessConfig":
        return dataclasses.replace(self, **changes)


_HINTS = typing.get_type_hints(HarnessConfig)


def _parse_value(name: str, raw: str):
    hint = _HINTS[name]
    text = raw.strip()
    optional = typing.get_origin(hint) is typing.Union
    if optional:
        if text.lower() in ("", "none"):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    if hint is bool:
        if text.lower() in ("true", "yes", "1", "on"):
            return True
        if text.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    if hint is int:
        return int(text)
    if hint is float:
        return float(text)
    if hint is str:
        return text
    # float vectors
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_config(text: str, base: Optional[HarnessConfig] = None) -> HarnessConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _HINTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return (base or HarnessConfig()).replace(**values)


def load_config(path) -> HarnessConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(config: HarnessConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(config, f.name))}\n" for f in dataclasses.fields(config))

"""Point trackers standing in for a learned tracker.

Both trackers consume the true projection of the pruning point each cycle.
The ideal tracker reports it verbatim; the noisy tracker adds isotropic
Gaussian pixel noise and random occlusion episodes. During an occlusion the
noisy tracker still reports the (noisy) true position, as a learned tracker
that infers occluded points would, unless ``hold_last`` is set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .camera import CameraIntrinsics, Projection


class TrackerError(ValueError):
    pass


@dataclass(frozen=True)
class TrackedPoint:
    u: float
    v: float
    visible: bool
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise TrackerError("tracked pixel must be finite")
        if not 0.0 <= self.confidence <= 1.0:
            raise TrackerError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class TrackerNoiseModel:
    pixel_sigma: float = 2.0
    occlusion_probability: float = 0.02
    occlusion_duration_mean: float = 3.0
    seed: int = 0
    hold_last: bool = False

    def __post_init__(self):
        if not self.pixel_sigma >= 0:
            raise TrackerError("pixel_sigma must be >= 0")
        if not 0.0 <= self.occlusion_probability <= 1.0:
            raise TrackerError("occlusion_probability must lie in [0, 1]")
        if not self.occlusion_duration_mean >= 1.0:
            raise TrackerError("occlusion_duration_mean must be >= 1 cycle")


OCCLUDED_CONFIDENCE = 0.5


class IdealTracker:
    """Reports the true pixel; visible exactly when the point is in frame."""

    def __init__(self, query: tuple[float, float], intrinsics: CameraIntrinsics = CameraIntrinsics()):
        u, v = map(float, query)
        if not intrinsics.contains(u, v):
            raise TrackerError(f"query pixel ({u}, {v}) lies outside the {intrinsics.width}x{intrinsics.height} image")
        self.query = (u, v)
        self.last = TrackedPoint(u, v, True, 1.0)

    def update(self, projection: Projection) -> TrackedPoint:
        if projection.depth <= 0.0:
            self.last = TrackedPoint(self.last.u, self.last.v, False, 0.0)
        else:
            self.last = TrackedPoint(projection.u, projection.v, projection.in_frame, 1.0)
        return self.last


class NoisyTracker(IdealTracker):
    def __init__(
        self,
        query: tuple[float, float],
        noise: TrackerNoiseModel = TrackerNoiseModel(),
        intrinsics: CameraIntrinsics = CameraIntrinsics(),
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__(query, intrinsics)
        self.noise = noise
        self.rng = rng if rng is not None else np.random.default_rng(noise.seed)
        self.occluded_for = 0

    def _advance_occlusion(self) -> bool:
        # the draws happen every cycle so the noise stream does not depend on
        # the occlusion history
        onset = self.rng.random()
        duration = self.rng.geometric(1.0 / self.noise.occlusion_duration_mean)
        if self.occluded_for > 0:
            self.occluded_for -= 1
            return True
        if onset < self.noise.occlusion_probability:
            self.occluded_for = int(duration) - 1
            return True
        return False

    def update(self, projection: Projection) -> TrackedPoint:
        du, dv = self.rng.normal(0.0, 1.0, size=2) * self.noise.pixel_sigma
        occluded = self._advance_occlusion()
        if projection.depth <= 0.0:
            self.last = TrackedPoint(self.last.u, self.last.v, False, 0.0)
            return self.last
        if occluded and self.noise.hold_last:
            self.last = TrackedPoint(self.last.u, self.last.v, False, OCCLUDED_CONFIDENCE)
            return self.last
        u = projection.u + du
        v = projection.v + dv
        if occluded:
            self.last = TrackedPoint(u, v, False, OCCLUDED_CONFIDENCE)
        else:
            self.last = TrackedPoint(u, v, projection.in_frame, 1.0)
        return self.last


def init_tracker(
    query: tuple[float, float],
    kind: str = "ideal",
    noise: TrackerNoiseModel = TrackerNoiseModel(),
    intrinsics: CameraIntrinsics = CameraIntrinsics(),
    rng: Optional[np.random.Generator] = None,
) -> IdealTracker:
    if kind == "ideal":
        return IdealTracker(query, intrinsics)
    if kind == "noisy":
        return NoisyTracker(query, noise, intrinsics, rng)
    raise TrackerError(f"unknown tracker kind {kind!r}")

"""End-effector and pixel error metrics and the per-run summary."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

SUCCESS_THRESHOLDS_MM = (5.0, 10.0)


@dataclass(frozen=True)
class TrialResult:
    trial_id: int
    final_ee_error_mm: float
    final_pixel_error_px: float
    cycles: int
    termination: str
    seed: int = 0
    target: tuple[float, float, float] = (math.nan, math.nan, math.nan)
    init_offset_px: float = math.nan
    init_u_px: float = math.nan
    init_v_px: float = math.nan

    @property
    def succeeded(self) -> bool:
        return self.termination == "DepthReached"


@dataclass(frozen=True)
class MetricsSummary:
    trial_count: int
    mean_pixel_error_px: float
    std_pixel_error_px: float
    mean_ee_error_mm: float
    std_ee_error_mm: float
    success_rate_5mm_pct: float
    success_rate_10mm_pct: float

    def to_dict(self) -> dict:
        return asdict(self)


def e_pos(ee, target) -> float:
    """Euclidean distance between two points given in metres, in millimetres."""
    d = np.asarray(ee, dtype=float) - np.asarray(target, dtype=float)
    return float(np.sqrt(np.sum(d * d))) * 1000.0


def e_pixel(tracked, center) -> float:
    return math.hypot(float(tracked[0]) - float(center[0]), float(tracked[1]) - float(center[1]))


def summarize(results: Sequence[TrialResult], thresholds: Sequence[float] = SUCCESS_THRESHOLDS_MM) -> MetricsSummary:
    """Population mean/std of both error series and success rates (percent).

    A trial counts towards a success rate only if it terminated on the depth
    condition with an end-effector error strictly below the threshold; every
    trial counts in the denominator.
    """
    if len(results) == 0:
        raise ValueError("cannot summarize an empty result list")
    lo, hi = thresholds
    ee = np.array([r.final_ee_error_mm for r in results], dtype=float)
    px = np.array([r.final_pixel_error_px for r in results], dtype=float)
    ok = np.array([r.succeeded for r in results])
    n = len(results)
    return MetricsSummary(
        trial_count=n,
        mean_pixel_error_px=float(px.mean()),
        std_pixel_error_px=float(px.std()),
        mean_ee_error_mm=float(ee.mean()),
        std_ee_error_mm=float(ee.std()),
        success_rate_5mm_pct=100.0 * int(np.sum(ok & (ee < lo))) / n,
        success_rate_10mm_pct=100.0 * int(np.sum(ok & (ee < hi))) / n,
    )

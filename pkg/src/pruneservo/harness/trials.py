"""Target sampling and the Monte-Carlo trial runner."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..camera import CameraIntrinsics, project, unproject
from ..kinematics import Pose
from ..servo import ControlGains, Rig, ServoConfig, Trajectory, run_servo
from ..tracker import TrackerNoiseModel, init_tracker
from .config import HarnessConfig
from .metrics import MetricsSummary, TrialResult, e_pixel, e_pos, summarize

log = logging.getLogger(__name__)

MAX_PLACEMENT_ATTEMPTS = 10_000


@dataclass(frozen=True)
class TrialSpec:
    trial_id: int
    seed: int
    target_position: np.ndarray
    initial_joints: np.ndarray
    init_offset_px: float
    init_pixel: tuple[float, float]
    gains: ControlGains
    noise: TrackerNoiseModel


def trial_seed(master_seed: int, trial_id: int) -> int:
    """Per-trial seed, a pure function of (master seed, trial id)."""
    return int(np.random.SeedSequence([master_seed, trial_id]).generate_state(1)[0])


def sample_targets(
    n: int,
    rng: np.random.Generator,
    camera: Pose,
    k: CameraIntrinsics = CameraIntrinsics(),
    initial_joints=None,
    depth_range: tuple[float, float] = (0.45, 0.70),
    offset_range: tuple[float, float] = (50.0, 350.0),
    workspace: Optional[tuple[Sequence[float], Sequence[float]]] = None,
    master_seed: int = 0,
    gains: ControlGains = ControlGains(),
    noise: TrackerNoiseModel = TrackerNoiseModel(),
) -> list[TrialSpec]:
    """Place ``n`` targets in front of ``camera``.

    Pixel offset from the image centre is uniform in ``offset_range``,
    bearing uniform, depth uniform in ``depth_range``; placements falling
    outside the image or the optional world-space ``workspace`` box are
    redrawn.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    lo_off, hi_off = offset_range
    lo_box = hi_box = None
    if workspace is not None:
        lo_box, hi_box = (np.asarray(b, dtype=float) for b in workspace)
    q0 = np.zeros(6) if initial_joints is None else np.asarray(initial_joints, dtype=float)
    specs = []
    for trial_id in range(n):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            r = rng.uniform(lo_off, hi_off)
            bearing = rng.uniform(0.0, 2.0 * math.pi)
            depth = rng.uniform(*depth_range)
            u = k.cx + r * math.cos(bearing)
            v = k.cy + r * math.sin(bearing)
            if not k.contains(u, v):
                continue
            target = unproject(u, v, depth, camera, k)
            if lo_box is not None and not (np.all(target >= lo_box) and np.all(target <= hi_box)):
                continue
            proj = project(target, camera, k)
            offset = e_pixel(proj.pixel, k.center)
            if proj.in_frame and lo_off <= offset <= hi_off:
                break
        else:
            raise ValueError(
                f"no valid target placement for trial {trial_id} after {MAX_PLACEMENT_ATTEMPTS} attempts; "
                "check offset, depth and workspace bounds"
            )
        seed = trial_seed(master_seed, trial_id)
        specs.append(
            TrialSpec(
                trial_id=trial_id,
                seed=seed,
                target_position=target,
                initial_joints=q0.copy(),
                init_offset_px=offset,
                init_pixel=proj.pixel,
                gains=gains,
                noise=TrackerNoiseModel(
                    noise.pixel_sigma, noise.occlusion_probability, noise.occlusion_duration_mean, seed, noise.hold_last
                ),
            )
        )
    return specs


def specs_from_config(config: HarnessConfig) -> list[TrialSpec]:
    rig = config.rig()
    workspace = None
    if config.workspace_min is not None or config.workspace_max is not None:
        workspace = (
            config.workspace_min or (-math.inf,) * 3,
            config.workspace_max or (math.inf,) * 3,
        )
    return sample_targets(
        config.trials,
        np.random.default_rng(config.seed),
        rig.camera(config.initial_joints),
        rig.intrinsics,
        initial_joints=config.initial_joints,
        depth_range=(config.depth_min, config.depth_max),
        offset_range=(config.offset_min_px, config.offset_max_px),
        workspace=workspace,
        master_seed=config.seed,
        gains=config.gains(),
        noise=config.noise(),
    )


def run_trial(spec: TrialSpec, tracker_kind: str, servo: ServoConfig, rig: Rig) -> tuple[TrialResult, Trajectory]:
    tracker = init_tracker(spec.init_pixel, tracker_kind, spec.noise, rig.intrinsics)
    config = ServoConfig(servo.stop_depth, servo.max_cycles, spec.gains, servo.tool_offset, servo.lost_patience)
    traj = run_servo(spec.initial_joints, spec.target_position, tracker, config, rig)
    final = traj.final_state
    tip = rig.tool_point(final.joints, config.tool_length)
    last = traj.records[-1].tracked
    result = TrialResult(
        trial_id=spec.trial_id,
        final_ee_error_mm=e_pos(tip, spec.target_position),
        final_pixel_error_px=e_pixel((last.u, last.v), rig.intrinsics.center),
        cycles=len(traj.records),
        termination=traj.termination.value,
        seed=spec.seed,
        target=tuple(float(x) for x in spec.target_position),
        init_offset_px=float(spec.init_offset_px),
        init_u_px=float(spec.init_pixel[0]),
        init_v_px=float(spec.init_pixel[1]),
    )
    log.debug("trial %d: %s after %d cycles, %.3f mm", spec.trial_id, result.termination, result.cycles, result.final_ee_error_mm)
    return result, traj


def _run_one(args):
    return run_trial(*args)


def run_trials(
    config: HarnessConfig, out_dir=None, keep_trajectories: bool = True
) -> tuple[list[TrialResult], MetricsSummary, list[Trajectory]]:
    """Run every sampled trial (serially or in ``config.workers`` processes),
    summarize, and write the report files when ``out_dir`` is given."""
    specs = specs_from_config(config)
    rig, servo = config.rig(), config.servo()
    jobs = [(spec, config.tracker, servo, rig) for spec in specs]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]
    outcomes.sort(key=lambda o: o[0].trial_id)
    results = [o[0] for o in outcomes]
    trajectories = [o[1] for o in outcomes] if keep_trajectories else []
    summary = summarize(results)
    if out_dir is not None:
        from .report import emit_report, write_trajectories

        emit_report(summary, results, out_dir, config.histogram_bin_mm)
        if trajectories:
            write_trajectories(results, trajectories, Path(out_dir) / "trajectories.csv")
    return results, summary, trajectories

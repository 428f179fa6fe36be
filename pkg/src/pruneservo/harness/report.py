"""CSV/JSON report files.

trials.csv      trial_id, seed, target_x_m, target_y_m, target_z_m, init_offset_px,
                cycles, termination, final_pixel_err_px, final_ee_err_mm
summary.json    MetricsSummary fields
scatter.csv     init_u_px, init_v_px, final_ee_err_mm
histogram.csv   bin_low_mm, bin_high_mm, count
trajectories.csv  one row per control cycle of every trial
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

from .metrics import MetricsSummary, TrialResult

TRIALS_COLUMNS = [
    "trial_id",
    "seed",
    "target_x_m",
    "target_y_m",
    "target_z_m",
    "init_offset_px",
    "cycles",
    "termination",
    "final_pixel_err_px",
    "final_ee_err_mm",
]
SCATTER_COLUMNS = ["init_u_px", "init_v_px", "final_ee_err_mm"]
HISTOGRAM_COLUMNS = ["bin_low_mm", "bin_high_mm", "count"]
TRAJECTORY_COLUMNS = [
    "trial_id",
    "cycle",
    "tracked_u_px",
    "tracked_v_px",
    "visible",
    "err_x_px",
    "err_y_px",
    "depth_m",
    "flange_x_m",
    "flange_y_m",
    "flange_z_m",
    "q1",
    "q2",
    "q3",
    "q4",
    "q5",
    "q6",
    "moved",
]


class ReportError(Exception):
    pass


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise ReportError(f"failed to write {path}: {exc}") from exc


def histogram_bins(errors_mm: Sequence[float], bin_mm: float = 1.0, min_top_mm: float = 10.0):
    top = max([min_top_mm, *errors_mm]) if errors_mm else min_top_mm
    nbins = max(1, int(math.floor(top / bin_mm)) + 1)
    counts = [0] * nbins
    for e in errors_mm:
        counts[min(int(math.floor(e / bin_mm)), nbins - 1)] += 1
    return [(i * bin_mm, (i + 1) * bin_mm, c) for i, c in enumerate(counts)]


def emit_report(summary: MetricsSummary, results: Sequence[TrialResult], out_dir, bin_mm: float = 1.0) -> dict:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {out}: {exc}") from exc
    paths = {name: out / name for name in ("trials.csv", "summary.json", "scatter.csv", "histogram.csv")}
    _write_csv(
        paths["trials.csv"],
        TRIALS_COLUMNS,
        (
            [
                r.trial_id,
                r.seed,
                *(repr(float(x)) for x in r.target),
                repr(r.init_offset_px),
                r.cycles,
                r.termination,
                repr(r.final_pixel_error_px),
                repr(r.final_ee_error_mm),
            ]
            for r in results
        ),
    )
    try:
        paths["summary.json"].write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    except OSError as exc:
        raise ReportError(f"failed to write {paths['summary.json']}: {exc}") from exc
    _write_csv(
        paths["scatter.csv"],
        SCATTER_COLUMNS,
        ([repr(r.init_u_px), repr(r.init_v_px), repr(r.final_ee_error_mm)] for r in results),
    )
    _write_csv(
        paths["histogram.csv"],
        HISTOGRAM_COLUMNS,
        ([repr(lo), repr(hi), c] for lo, hi, c in histogram_bins([r.final_ee_error_mm for r in results], bin_mm)),
    )
    return paths


def write_trajectories(results: Sequence[TrialResult], trajectories, path) -> None:
    def rows():
        for res, traj in zip(results, trajectories):
            for rec in traj.records:
                yield [
                    res.trial_id,
                    rec.cycle,
                    repr(rec.tracked.u),
                    repr(rec.tracked.v),
                    int(rec.tracked.visible),
                    repr(float(rec.pixel_error[0])),
                    repr(float(rec.pixel_error[1])),
                    repr(float(rec.depth)),
                    *(repr(float(x)) for x in rec.flange_position),
                    *(repr(float(x)) for x in rec.joints),
                    int(rec.moved),
                ]

    _write_csv(Path(path), TRAJECTORY_COLUMNS, rows())


def read_trials_csv(path) -> list[TrialResult]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(TRIALS_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise ReportError(f"{path}: missing columns {sorted(missing)}")
            return [
                TrialResult(
                    trial_id=int(row["trial_id"]),
                    final_ee_error_mm=float(row["final_ee_err_mm"]),
                    final_pixel_error_px=float(row["final_pixel_err_px"]),
                    cycles=int(row["cycles"]),
                    termination=row["termination"],
                    seed=int(row["seed"]),
                    target=(float(row["target_x_m"]), float(row["target_y_m"]), float(row["target_z_m"])),
                    init_offset_px=float(row["init_offset_px"]),
                )
                for row in reader
            ]
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from exc


def read_summary(path) -> MetricsSummary:
    return MetricsSummary(**json.loads(Path(path).read_text()))

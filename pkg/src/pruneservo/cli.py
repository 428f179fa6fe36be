"""Command line entry point: ``pruneservo run | metrics | sweep``."""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    HarnessConfig,
    dump_config,
    load_config,
    read_trials_csv,
    run_trials,
    summarize,
)
from .harness.report import ReportError, _write_csv

SWEEP_PARAMS = {"kp_x": "kp_x", "kp_z": "kp_z", "dy": "dy_forward", "sigma": "pixel_sigma"}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _base_config(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    overrides = {}
    for key in ("trials", "seed", "tracker", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return cfg.replace(**overrides)


def _run(cfg: HarnessConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    _, summary, _ = run_trials(cfg, out)
    return summary.to_dict()


def cmd_run(args) -> int:
    cfg = _base_config(args)
    summary = _run(cfg, Path(args.out))
    print(json.dumps(summary, indent=2))
    return 0


def cmd_metrics(args) -> int:
    summary = summarize(read_trials_csv(args.trials_csv)).to_dict()
    text = json.dumps(summary, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = _base_config(args)
    axes = {field: getattr(args, flag) for flag, field in SWEEP_PARAMS.items() if getattr(args, flag)}
    if not axes:
        raise ConfigError("sweep needs at least one of --kp-x, --kp-z, --dy, --sigma")
    out = Path(args.out)
    rows = []
    names = list(axes)
    for values in itertools.product(*(axes[n] for n in names)):
        cell = dict(zip(names, values))
        cell_dir = out / "_".join(f"{k}={v:g}" for k, v in cell.items())
        logging.info("sweep cell %s", cell_dir.name)
        summary = _run(cfg.replace(**cell), cell_dir)
        rows.append([cell_dir.name, *values, *summary.values()])
        header = ["cell", *names, *summary.keys()]
    _write_csv(out / "sweep.csv", header, rows)
    print(f"wrote {len(rows)} cells to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pruneservo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tracker", choices=["ideal", "noisy"])
        p.add_argument("--workers", type=int, help="parallel trial processes")
        p.add_argument("--out", required=True, help="output directory")

    run = sub.add_parser("run", help="execute a batch of servo trials")
    common(run)
    run.set_defaults(func=cmd_run)

    metrics = sub.add_parser("metrics", help="recompute the summary from a trials.csv")
    metrics.add_argument("trials_csv")
    metrics.add_argument("--out", help="write summary JSON here as well")
    metrics.set_defaults(func=cmd_metrics)

    sweep = sub.add_parser("sweep", help="grid over gains and tracker noise")
    common(sweep)
    sweep.add_argument("--kp-x", dest="kp_x", type=_floats)
    sweep.add_argument("--kp-z", dest="kp_z", type=_floats)
    sweep.add_argument("--dy", type=_floats, help="forward advance per cycle (m)")
    sweep.add_argument("--sigma", type=_floats, help="tracker pixel noise (px)")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

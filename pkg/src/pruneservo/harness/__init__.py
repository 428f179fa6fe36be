from .config import ConfigError, HarnessConfig, dump_config, load_config, parse_config
from .metrics import MetricsSummary, TrialResult, e_pixel, e_pos, summarize
from .report import emit_report, read_summary, read_trials_csv
from .trials import TrialSpec, run_trial, run_trials, sample_targets, specs_from_config, trial_seed

__all__ = [
    "ConfigError",
    "HarnessConfig",
    "MetricsSummary",
    "TrialResult",
    "TrialSpec",
    "dump_config",
    "e_pixel",
    "e_pos",
    "emit_report",
    "load_config",
    "parse_config",
    "read_summary",
    "read_trials_csv",
    "run_trial",
    "run_trials",
    "sample_targets",
    "specs_from_config",
    "summarize",
    "trial_seed",
]

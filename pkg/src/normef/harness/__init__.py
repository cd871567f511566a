"""Experiment harness: TOML configs, runs, horizon search, checks and the CLI."""
from .checks import CheckReport, CheckResult, check_suite, finite_diff_grad
from .config import ConfigValidationError, ExperimentConfig, load_config, save_config
from .experiment import (
    GridSearchError,
    build,
    compare,
    grid_search_K,
    run_experiment,
    write_joint_csv,
)

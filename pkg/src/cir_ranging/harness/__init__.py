"""Experiment harness: configuration, dataset synthesis and persistence,
metrics, the end-to-end experiment driver, and the command-line interface."""

from .config import ExperimentConfig, load_config, parse_config, render_config
from .dataset import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    RangingDataset,
    experiment_seeds,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .experiment import render_report, run_experiment
from .metrics import Metrics, compute_metrics

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "render_config",
    "SPLIT_TEST",
    "SPLIT_TRAIN",
    "RangingDataset",
    "experiment_seeds",
    "generate_dataset",
    "read_dataset",
    "write_dataset",
    "render_report",
    "run_experiment",
    "Metrics",
    "compute_metrics",
]

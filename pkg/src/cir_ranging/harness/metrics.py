"""Ranging-error summary statistics: bias and sample standard deviation."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    bias_m: float  # mean of (estimated - true)
    std_m: float  # sample standard deviation of the errors, n-1 denominator
    n: int


def compute_metrics(predictions_m, truths_m) -> Metrics:
    pred = np.asarray(predictions_m, dtype=np.float64)
    truth = np.asarray(truths_m, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(
            f"predictions and truths must be equal-length vectors, got {pred.shape} "
            f"and {truth.shape}"
        )
    if pred.size < 2:
        raise ValueError(f"need at least 2 samples for a standard deviation, got {pred.size}")
    errors = pred - truth
    return Metrics(
        bias_m=float(np.mean(errors)),
        std_m=float(np.std(errors, ddof=1)),
        n=int(pred.size),
    )

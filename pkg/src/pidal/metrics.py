"""Restoration metrics: ISNR, MAE, MSE and averaging over replicates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import check_same_shape


@dataclass(frozen=True)
class MetricsReport:
    isnr_db: float
    mae: float
    mse: float
    per_replicate: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.mae < 0 or self.mse < 0:
            raise ValueError("mae and mse must be nonnegative")


def mae(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Mean absolute error ``||estimate - truth||_1 / n``."""
    check_same_shape(estimate, truth)
    return float(np.mean(np.abs(np.asarray(estimate, float) - truth)))


def mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    check_same_shape(estimate, truth)
    r = np.asarray(estimate, float) - truth
    return float(np.vdot(r, r) / r.size)


def isnr(observed: np.ndarray, estimate: np.ndarray, truth: np.ndarray, observed_reference=None) -> float:
    """Improvement in SNR, ``10 log10(||y - ref||^2 / ||xhat - x||^2)`` in dB.

    ``ref`` is ``truth`` unless ``observed_reference`` is given (e.g. the
    blurred truth ``Kx``).
    """
    ref = truth if observed_reference is None else observed_reference
    check_same_shape(observed, estimate, truth, ref)
    num = np.sum((np.asarray(observed, float) - ref) ** 2)
    den = np.sum((np.asarray(estimate, float) - truth) ** 2)
    if den == 0:
        raise ZeroDivisionError("estimate equals truth; ISNR is unbounded")
    return float(10.0 * np.log10(num / den))


def evaluate(observed, estimate, truth, truth_reference: str = "x", blurred_truth=None) -> MetricsReport:
    """Compute all metrics for one replicate.

    ``truth_reference`` selects what the observation is compared against in
    the ISNR numerator: the truth ``"x"`` or the blurred truth ``"Kx"``.
    """
    if truth_reference == "x":
        ref = None
    elif truth_reference == "Kx":
        if blurred_truth is None:
            raise ValueError("truth_reference='Kx' needs blurred_truth")
        ref = blurred_truth
    else:
        raise ValueError(f"truth_reference must be 'x' or 'Kx', got {truth_reference!r}")
    return MetricsReport(
        isnr_db=isnr(observed, estimate, truth, ref),
        mae=mae(estimate, truth),
        mse=mse(estimate, truth),
    )


def aggregate(reports) -> MetricsReport:
    """Arithmetic mean of every metric; the inputs are kept in ``per_replicate``."""
    reports = tuple(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty sequence of reports")
    return MetricsReport(
        isnr_db=float(np.mean([r.isnr_db for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
        mse=float(np.mean([r.mse for r in reports])),
        per_replicate=reports,
    )

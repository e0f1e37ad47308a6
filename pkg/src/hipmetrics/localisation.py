"""Landmark localisation evaluation: radial errors, aggregation, SDR@r.

The overall mean is the unweighted mean of the four per-landmark means (each
landmark counts equally); the overall median pools every error. SDR at radius
r counts errors <= r, inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    LANDMARK_ORDER,
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    pixels_to_mm,
)
from .errors import EvaluationError


@dataclass(frozen=True)
class LandmarkErrorSummary:
    mean_re_mm: float
    median_re_mm: float
    n: int


@dataclass(frozen=True)
class LocalisationReport:
    per_landmark: Mapping[LandmarkId, LandmarkErrorSummary]
    overall_mean_re_mm: float
    overall_median_re_mm: float
    sdr: Mapping[float, float]  # radius mm -> percentage in [0, 100]


def radial_error(
    pred: Point2,
    gt: Point2,
    geometry: ImageGeometry,
    frame: Frame = Frame.NATIVE,
) -> float:
    """Euclidean distance between prediction and ground truth, in mm.

    Both points must be expressed in ``frame``; network-frame displacements
    are divided by the resize scale before the per-axis mm conversion.
    """
    dx = pred[0] - gt[0]
    dy = pred[1] - gt[1]
    return pixels_to_mm((dx, dy), geometry, frame)


def subject_radial_errors(
    pred: LandmarkSet,
    gt: LandmarkSet,
    geometry: ImageGeometry,
) -> dict[LandmarkId, float]:
    """Per-landmark radial errors for one subject; frames must match."""
    if pred.frame is not gt.frame:
        raise EvaluationError(
            f"prediction frame {pred.frame.value} != ground truth frame {gt.frame.value}"
        )
    return {
        lid: radial_error(pred[lid], gt[lid], geometry, pred.frame)
        for lid in LANDMARK_ORDER
    }


def aggregate(
    errors: Mapping[LandmarkId, Sequence[float]],
    radii_mm: Sequence[float] = (2.0, 3.0, 4.0),
) -> LocalisationReport:
    """Aggregate per-subject per-landmark errors (mm) into a report."""
    if not errors:
        raise EvaluationError("no errors to aggregate")
    counts = {len(v) for v in errors.values()}
    if counts == {0}:
        raise EvaluationError("no errors to aggregate")
    if len(counts) != 1:
        raise EvaluationError(f"unequal error counts per landmark: {sorted(counts)}")
    missing = [lid.value for lid in LANDMARK_ORDER if lid not in errors]
    if missing:
        raise EvaluationError(f"missing landmarks in error table: {missing}")

    per_landmark: dict[LandmarkId, LandmarkErrorSummary] = {}
    pooled: list[float] = []
    for lid in LANDMARK_ORDER:
        vals = np.asarray(errors[lid], dtype=np.float64)
        if (vals < 0).any() or not np.isfinite(vals).all():
            raise EvaluationError(f"{lid.value} errors must be finite and >= 0")
        per_landmark[lid] = LandmarkErrorSummary(
            mean_re_mm=float(vals.mean()),
            median_re_mm=float(np.median(vals)),
            n=int(vals.size),
        )
        pooled.extend(vals.tolist())

    pooled_arr = np.asarray(pooled)
    overall_mean = float(
        np.mean([per_landmark[lid].mean_re_mm for lid in LANDMARK_ORDER])
    )
    sdr = {
        float(r): float(100.0 * np.count_nonzero(pooled_arr <= r) / pooled_arr.size)
        for r in radii_mm
    }
    return LocalisationReport(
        per_landmark=per_landmark,
        overall_mean_re_mm=overall_mean,
        overall_median_re_mm=float(np.median(pooled_arr)),
        sdr=sdr,
    )

"""Three-tier cohort evaluation: localisation, angle agreement, screening.

Takes annotation records that already carry predictions and produces the
report structure serialised by :mod:`hipmetrics.io_formats` (per-landmark
and overall radial errors plus SDR;
MAE/median/ICC/Bland-Altman per angle; cam and pincer screening rates).
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .agreement import (
    BlandAltmanResult,
    PairedSeries,
    bland_altman,
    bland_altman_rows,
    icc_2_1,
    mae,
    median_abs_diff,
)
from .config import Config
from .core import LANDMARK_ORDER, LandmarkId, SubjectRecord, landmarks_to_native
from .errors import EvaluationError, StatsError
from .geometry import angles_for, classify
from .io_formats import cell
from .localisation import aggregate, subject_radial_errors
from .screening import confusion, rates


def evaluate_cohort(records: Sequence[SubjectRecord], cfg: Config) -> tuple[dict, dict]:
    """Evaluate a cohort; returns (report dict, bland-altman export sections)."""
    if not records:
        raise EvaluationError("no subjects to evaluate")
    missing = [r.image_key for r in records if r.predicted is None]
    if missing:
        raise EvaluationError(
            f"records without predictions: {', '.join(missing[:5])}"
            + ("..." if len(missing) > 5 else "")
        )

    notices: list[str] = []
    errors: dict[LandmarkId, list[float]] = {lid: [] for lid in LANDMARK_ORDER}
    gt_alpha, gt_lce, pred_alpha, pred_lce = [], [], [], []
    gt_cam, gt_pincer, pred_cam, pred_pincer = [], [], [], []
    image_keys: list[str] = []

    for r in records:
        gt_native = landmarks_to_native(r.ground_truth, r.geometry)
        pred_native = landmarks_to_native(r.predicted, r.geometry)
        for lid, err in subject_radial_errors(pred_native, gt_native, r.geometry).items():
            errors[lid].append(err)

        gt_angles = r.clinician_angles
        if gt_angles is None:
            gt_angles = angles_for(gt_native, r.geometry,
                                   cfg.alpha_threshold, cfg.lce_threshold)
        else:
            # re-apply configured thresholds to stored clinician angles
            gt_angles = classify(gt_angles.alpha_deg, gt_angles.lce_deg,
                                 cfg.alpha_threshold, cfg.lce_threshold)
        pred_angles = angles_for(pred_native, r.geometry,
                                 cfg.alpha_threshold, cfg.lce_threshold)
        r.gt_angles, r.pred_angles = gt_angles, pred_angles

        gt_alpha.append(gt_angles.alpha_deg)
        gt_lce.append(gt_angles.lce_deg)
        pred_alpha.append(pred_angles.alpha_deg)
        pred_lce.append(pred_angles.lce_deg)
        gt_cam.append(gt_angles.cam_positive)
        gt_pincer.append(gt_angles.pincer_positive)
        pred_cam.append(pred_angles.cam_positive)
        pred_pincer.append(pred_angles.pincer_positive)
        image_keys.append(r.image_key)

    loc = aggregate(errors, cfg.sdr_radii)
    report: dict[str, Any] = {
        "n_subjects": len(records),
        "localisation": {
            "per_landmark": {
                lid.value: {
                    "mean_re_mm": cell(s.mean_re_mm),
                    "median_re_mm": cell(s.median_re_mm),
                    "n": s.n,
                }
                for lid, s in loc.per_landmark.items()
            },
            "overall_mean_re_mm": cell(loc.overall_mean_re_mm),
            "overall_median_re_mm": cell(loc.overall_median_re_mm),
            "sdr_pct": {str(r): cell(v) for r, v in loc.sdr.items()},
        },
    }

    subject_ids = tuple(r.subject_id for r in records)
    ba_sections: dict[str, tuple[BlandAltmanResult, list]] = {}
    agreement: dict[str, Any] = {}
    for name, pred_vals, gt_vals in (
        ("alpha", pred_alpha, gt_alpha),
        ("lce", pred_lce, gt_lce),
    ):
        series = PairedSeries(np.asarray(pred_vals), np.asarray(gt_vals),
                              subject_ids=subject_ids)
        section: dict[str, Any] = {
            "n": series.n,
            "mae_deg": cell(mae(series)),
            "median_abs_diff_deg": cell(median_abs_diff(series)),
        }
        if series.n >= 2:
            try:
                icc = icc_2_1(series)
                section["icc_2_1"] = {
                    "value": cell(icc.icc),
                    "band": icc.band.value,
                    "ms_rows": icc.ms_rows,
                    "ms_cols": icc.ms_cols,
                    "ms_error": icc.ms_error,
                }
            except StatsError as exc:
                section["icc_2_1"] = None
                notices.append(f"{name}: ICC skipped ({exc})")
            ba = bland_altman(series)
            section["bland_altman"] = _ba_to_obj(ba)
            if ba.regression_degenerate:
                notices.append(f"{name}: proportional-bias regression degenerate "
                               "(all pairwise means identical)")
            elif ba.slope_p is None:
                notices.append(f"{name}: slope p-value needs n >= 3")
            rows = [
                (key, m, d)
                for key, (m, d) in zip(image_keys, bland_altman_rows(series))
            ]
            ba_sections[name] = (ba, rows)
        else:
            section["icc_2_1"] = None
            section["bland_altman"] = None
            notices.append(f"{name}: ICC and Bland-Altman skipped (n < 2)")
        agreement[name] = section
    report["agreement"] = agreement

    screening: dict[str, Any] = {}
    for name, pred_flags, gt_flags in (
        ("cam", pred_cam, gt_cam),
        ("pincer", pred_pincer, gt_pincer),
    ):
        rep = rates(confusion(pred_flags, gt_flags))
        screening[name] = {
            "counts": {"tp": rep.counts.tp, "fp": rep.counts.fp,
                       "tn": rep.counts.tn, "fn": rep.counts.fn},
            "accuracy_pct": cell(rep.accuracy),
            "sensitivity_pct": cell(rep.sensitivity),
            "specificity_pct": cell(rep.specificity),
            "ppv_pct": cell(rep.ppv),
            "npv_pct": cell(rep.npv),
        }
    report["screening"] = screening
    report["notices"] = notices
    return report, ba_sections


def _ba_to_obj(ba: BlandAltmanResult) -> dict:
    return {
        "n": ba.n,
        "bias_deg": cell(ba.bias),
        "sd_diff_deg": cell(ba.sd_diff),
        "loa_low_deg": cell(ba.loa_low),
        "loa_high_deg": cell(ba.loa_high),
        "slope": cell(ba.slope),
        "intercept": cell(ba.intercept),
        "slope_p": None if ba.slope_p is None else ba.slope_p,
        "regression_degenerate": ba.regression_degenerate,
    }


def aggregate_runs(reports: Sequence[dict]) -> dict:
    """Mean and std per numeric cell across repeated-run reports.

    Reports must share their cell structure (same landmarks, radii, angles).
    Cells that are absent in any run stay absent in the summary.
    """
    if not reports:
        raise EvaluationError("no reports to aggregate")

    def walk(objs: list):
        first = objs[0]
        if isinstance(first, dict) and set(first) == {"value", "display"}:
            vals = [o["value"] for o in objs]
            if any(v is None for v in vals):
                return {"mean": cell(None), "std": cell(None), "n_runs": len(vals)}
            arr = np.asarray(vals, dtype=np.float64)
            sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            return {"mean": cell(float(arr.mean())), "std": cell(sd),
                    "n_runs": len(vals)}
        if isinstance(first, dict):
            keys = set(first)
            for o in objs:
                if not isinstance(o, dict) or set(o) != keys:
                    raise EvaluationError("report structures differ; cannot aggregate")
            return {k: walk([o[k] for o in objs]) for k in first}
        if all(o == first for o in objs):
            return first
        return [o for o in objs]  # differing scalars: keep per-run values

    body = walk([{k: r[k] for k in r if k not in ("format", "version", "notices")}
                 for r in reports])
    return {"n_runs": len(reports), "cells": body}

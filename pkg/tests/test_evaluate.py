import numpy as np
import pytest

from hipmetrics import EvaluationError
from hipmetrics.config import Config
from hipmetrics.evaluate import aggregate_runs, evaluate_cohort
from hipmetrics.geometry import angles_for, classify

from conftest import make_record


def _cohort(rng, n, noise_px=3.0):
    return [
        make_record(rng, f"p{i:03d}", f"img{i:03d}", with_prediction=True,
                    noise_px=noise_px)
        for i in range(n)
    ]


class TestEvaluateCohort:
    def test_clinician_angles_override_derived_ground_truth(self, rng):
        records = _cohort(rng, 6)
        for r in records:
            derived = angles_for(r.ground_truth, r.geometry)
            r.clinician_angles = classify(derived.alpha_deg + 5.0,
                                          derived.lce_deg + 3.0)
        report, _ = evaluate_cohort(records, Config())
        preds = [angles_for(r.predicted, r.geometry) for r in records]
        expected_alpha_mae = float(np.mean([
            abs(p.alpha_deg - r.clinician_angles.alpha_deg)
            for p, r in zip(preds, records)
        ]))
        assert report["agreement"]["alpha"]["mae_deg"]["value"] == pytest.approx(
            expected_alpha_mae, abs=1e-9
        )

    def test_two_subjects_get_icc_but_no_slope_p(self, rng):
        records = _cohort(rng, 2)
        report, _ = evaluate_cohort(records, Config())
        assert report["agreement"]["alpha"]["icc_2_1"] is not None
        ba = report["agreement"]["alpha"]["bland_altman"]
        assert ba is not None and ba["slope_p"] is None
        assert any("n >= 3" in n for n in report["notices"])

    def test_missing_predictions_named(self, rng):
        records = _cohort(rng, 3)
        records[1].predicted = None
        with pytest.raises(EvaluationError, match="img001"):
            evaluate_cohort(records, Config())

    def test_custom_thresholds_change_screening(self, rng):
        records = _cohort(rng, 10, noise_px=0.0)
        base, _ = evaluate_cohort(records, Config())
        # with predictions == ground truth every subject agrees with itself
        assert base["screening"]["cam"]["accuracy_pct"]["value"] == 100.0
        shifted, _ = evaluate_cohort(records, Config(alpha_threshold=1.0))
        counts = shifted["screening"]["cam"]["counts"]
        # threshold 1 deg: every hip is cam-positive on both sides
        assert counts["tp"] == 10 and counts["tn"] == 0


class TestAggregateRuns:
    def test_structure_mismatch_rejected(self, rng):
        r1, _ = evaluate_cohort(_cohort(rng, 4), Config())
        r2, _ = evaluate_cohort(_cohort(rng, 4), Config(sdr_radii=(1.0, 2.0)))
        with pytest.raises(EvaluationError, match="differ"):
            aggregate_runs([r1, r2])

    def test_single_run_degenerates_to_zero_std(self, rng):
        r1, _ = evaluate_cohort(_cohort(rng, 4), Config())
        out = aggregate_runs([r1])
        cell = out["cells"]["localisation"]["overall_mean_re_mm"]
        assert cell["std"]["value"] == 0.0
        assert cell["n_runs"] == 1

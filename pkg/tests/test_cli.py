import json
import math

import numpy as np
import pytest

from hipmetrics import (
    Frame,
    LANDMARK_ORDER,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
)
from hipmetrics.cli import main
from hipmetrics.heatmaps import encode, sample_tta_transform, warp_heatmap, HeatmapStack
from hipmetrics.io_formats import (
    read_annotations,
    read_report,
    read_split_manifest,
    write_annotations,
    write_heatmaps,
)
from hipmetrics.core import landmarks_to_network

from conftest import identity_geometry, make_record, random_landmarks


def _network_native_cohort(rng, n=3, with_predictions=False):
    """Subjects whose native frame IS the 512 network frame (scale 1, pad 0)."""
    records = []
    for i in range(n):
        gt = random_landmarks(rng, 512, 512)
        # keep coordinates off half-integers so rounding is unambiguous
        pts = {}
        for lid, p in gt.points.items():
            x = round(p.x) + 0.25
            y = round(p.y) + 0.25
            pts[lid] = Point2(x, y)
        gt = LandmarkSet(points=pts, frame=Frame.NATIVE)
        records.append(
            SubjectRecord(
                subject_id=f"p{i:03d}",
                image_key=f"img{i:03d}",
                modality="xray",
                geometry=identity_geometry(512, spacing=0.5),
                ground_truth=gt,
                predicted=gt if with_predictions else None,
            )
        )
    return records


class TestEncode:
    def test_writes_one_file_per_subject(self, tmp_path, rng):
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 3), ann)
        out = tmp_path / "heatmaps"
        assert main(["encode", str(ann), str(out)]) == 0
        files = sorted(out.glob("*.hmf"))
        assert [f.name for f in files] == ["img000.hmf", "img001.hmf", "img002.hmf"]

    def test_rerun_is_byte_identical(self, tmp_path, rng):
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 2), ann)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["encode", str(ann), str(out1)]) == 0
        assert main(["encode", str(ann), str(out2)]) == 0
        for f1 in sorted(out1.glob("*.hmf")):
            f2 = out2 / f1.name
            assert f1.read_bytes() == f2.read_bytes()

    def test_zero_sigma_is_a_config_error(self, tmp_path, rng):
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 1), ann)
        assert main(["encode", str(ann), str(tmp_path / "x"), "--sigma", "0"]) == 1

    def test_missing_annotation_file_is_input_error(self, tmp_path):
        assert main(["encode", str(tmp_path / "nope.json"), str(tmp_path / "x")]) == 2


class TestDecode:
    def test_recovers_rounded_ground_truth(self, tmp_path, rng):
        records = _network_native_cohort(rng, 3)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        hm_dir = tmp_path / "heatmaps"
        assert main(["encode", str(ann), str(hm_dir)]) == 0
        out = tmp_path / "with_pred.json"
        assert main(["decode", str(hm_dir), str(ann), str(out)]) == 0
        decoded = read_annotations(out)
        for orig, dec in zip(records, decoded):
            assert dec.predicted is not None
            for lid in LANDMARK_ORDER:
                gt = orig.ground_truth[lid]
                pred = dec.predicted[lid]
                assert pred.x == round(gt.x) and pred.y == round(gt.y)

    def test_missing_heatmap_names_subject(self, tmp_path, rng, capsys):
        records = _network_native_cohort(rng, 2)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        hm_dir = tmp_path / "heatmaps"
        assert main(["encode", str(ann), str(hm_dir)]) == 0
        (hm_dir / "img001.hmf").unlink()
        rc = main(["decode", str(hm_dir), str(ann), str(tmp_path / "out.json")])
        assert rc == 2
        assert "p001" in capsys.readouterr().err

    def test_aggregates_multiple_views(self, tmp_path, rng):
        record = _network_native_cohort(rng, 1)[0]
        ann = tmp_path / "ann.json"
        write_annotations([record], ann)
        hm_dir = tmp_path / "heatmaps"
        hm_dir.mkdir()
        net = landmarks_to_network(record.ground_truth, record.geometry)
        gen = np.random.default_rng(77)
        for v in range(8):
            t = sample_tta_transform(gen)
            warped = {lid: warp_heatmap(encode(net[lid]), t) for lid in LANDMARK_ORDER}
            write_heatmaps(HeatmapStack(heatmaps=warped, view_transform=t),
                           hm_dir / f"{record.image_key}__v{v:03d}.hmf")
        out = tmp_path / "out.json"
        assert main(["decode", str(hm_dir), str(ann), str(out)]) == 0
        decoded = read_annotations(out)[0]
        for lid in LANDMARK_ORDER:
            gt = record.ground_truth[lid]
            pred = decoded.predicted[lid]
            assert math.hypot(pred.x - gt.x, pred.y - gt.y) <= 2.0


class TestEvaluate:
    def test_perfect_predictions(self, tmp_path, rng):
        records = _network_native_cohort(rng, 8, with_predictions=True)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        out = tmp_path / "report.json"
        assert main(["evaluate", str(ann), str(out)]) == 0
        report = read_report(out)
        assert report["localisation"]["overall_mean_re_mm"]["value"] == 0.0
        for angle in ("alpha", "lce"):
            sec = report["agreement"][angle]
            assert sec["mae_deg"]["value"] == 0.0
            assert sec["icc_2_1"]["value"]["value"] == 1.0
        assert report["screening"]["cam"]["accuracy_pct"]["value"] == 100.0
        assert report["screening"]["cam"]["accuracy_pct"]["display"] == "100.00"

    def test_single_subject_skips_agreement_stats(self, tmp_path, rng, capsys):
        records = _network_native_cohort(rng, 1, with_predictions=True)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        out = tmp_path / "report.json"
        assert main(["evaluate", str(ann), str(out)]) == 0
        report = read_report(out)
        assert report["localisation"]["overall_mean_re_mm"]["value"] == 0.0
        assert report["agreement"]["alpha"]["icc_2_1"] is None
        assert report["agreement"]["alpha"]["bland_altman"] is None
        assert any("n < 2" in n for n in report["notices"])
        assert "notice" in capsys.readouterr().err

    def test_bland_altman_export(self, tmp_path, rng):
        records = _network_native_cohort(rng, 5, with_predictions=True)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        ba = tmp_path / "ba.csv"
        assert main(["evaluate", str(ann), str(tmp_path / "r.json"),
                     "--bland-altman-out", str(ba)]) == 0
        lines = ba.read_text().splitlines()
        assert lines[0].startswith("# angle=alpha")
        assert sum(1 for l in lines if l.startswith("alpha,")) == 5
        assert sum(1 for l in lines if l.startswith("lce,")) == 5

    def test_missing_predictions_is_input_error(self, tmp_path, rng):
        records = _network_native_cohort(rng, 2, with_predictions=False)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        assert main(["evaluate", str(ann), str(tmp_path / "r.json")]) == 2


class TestSplit:
    def _cohort(self, rng, n_patients=30):
        records = []
        for i in range(n_patients):
            for t in range(int(rng.integers(1, 3))):
                records.append(make_record(rng, f"pat{i:03d}", f"pat{i:03d}_t{t}"))
        return records

    def test_manifest_has_patient_integrity(self, tmp_path, rng):
        records = self._cohort(rng)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        out = tmp_path / "split.csv"
        assert main(["split", str(ann), str(out), "--restarts", "50"]) == 0
        rows = read_split_manifest(out)
        assert len(rows) == len(records)
        parts_by_patient = {}
        for sid, _key, part in rows:
            parts_by_patient.setdefault(sid, set()).add(part)
        assert all(len(parts) == 1 for parts in parts_by_patient.values())

    def test_split_deterministic_under_seed(self, tmp_path, rng):
        records = self._cohort(rng)
        ann = tmp_path / "ann.json"
        write_annotations(records, ann)
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        assert main(["split", str(ann), str(out1), "--seed", "9", "--restarts", "40"]) == 0
        assert main(["split", str(ann), str(out2), "--seed", "9", "--restarts", "40"]) == 0
        assert out1.read_text() == out2.read_text()


class TestAggregateRuns:
    def test_mean_and_std_across_runs(self, tmp_path, rng):
        paths = []
        for run in range(3):
            records = _network_native_cohort(np.random.default_rng(run), 6,
                                             with_predictions=True)
            # perturb predictions differently per run
            gen = np.random.default_rng(100 + run)
            for r in records:
                pts = {lid: Point2(p.x + gen.uniform(0, 2), p.y + gen.uniform(0, 2))
                       for lid, p in r.predicted.points.items()}
                r.predicted = LandmarkSet(points=pts, frame=Frame.NATIVE)
            ann = tmp_path / f"ann{run}.json"
            write_annotations(records, ann)
            rep = tmp_path / f"report{run}.json"
            assert main(["evaluate", str(ann), str(rep)]) == 0
            paths.append(str(rep))
        out = tmp_path / "summary.json"
        assert main(["aggregate-runs", *paths, "--out", str(out)]) == 0
        summary = read_report(out)
        assert summary["n_runs"] == 3
        mre = summary["cells"]["localisation"]["overall_mean_re_mm"]
        assert mre["n_runs"] == 3
        assert mre["mean"]["value"] > 0
        assert mre["std"]["value"] >= 0


class TestUsage:
    def test_unknown_subcommand_exits_1(self):
        assert main(["frobnicate"]) == 1

    def test_config_file_and_flag_priority(self, tmp_path, rng):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sigma": 3.0}))
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 1), ann)
        # flag overrides file: sigma 0 from flag must fail even though file is valid
        assert main(["encode", str(ann), str(tmp_path / "o"),
                     "--config", str(cfg), "--sigma", "0"]) == 1
        assert main(["encode", str(ann), str(tmp_path / "o"),
                     "--config", str(cfg)]) == 0

    def test_unknown_config_key_rejected(self, tmp_path, rng):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sigam": 3.0}))
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 1), ann)
        assert main(["encode", str(ann), str(tmp_path / "o"),
                     "--config", str(cfg)]) == 1

    def test_env_var_config_fallback(self, tmp_path, rng, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sigma": 0.0}))
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 1), ann)
        monkeypatch.setenv("HIPMETRICS_CONFIG", str(cfg))
        assert main(["encode", str(ann), str(tmp_path / "o")]) == 1
        monkeypatch.delenv("HIPMETRICS_CONFIG")
        assert main(["encode", str(ann), str(tmp_path / "o")]) == 0

    def test_jobs_flag_keeps_output_deterministic(self, tmp_path, rng):
        ann = tmp_path / "ann.json"
        write_annotations(_network_native_cohort(rng, 4), ann)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        assert main(["encode", str(ann), str(serial), "--jobs", "1"]) == 0
        assert main(["encode", str(ann), str(parallel), "--jobs", "4"]) == 0
        for f in sorted(serial.glob("*.hmf")):
            assert f.read_bytes() == (parallel / f.name).read_bytes()

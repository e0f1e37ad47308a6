#!/usr/bin/env python3
"""End-to-end demo on a synthetic cohort.

Generates annotations, encodes ground-truth heatmaps, decodes them back as if
they were model predictions, splits the cohort, and runs the three-tier
evaluation. Everything goes through the CLI surface, so this doubles as a
smoke test of the installed package.

Usage: python scripts/run_demo.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from hipmetrics.cli import main as cli

import make_synthetic_cohort


def run(workdir: Path) -> int:
    workdir.mkdir(parents=True, exist_ok=True)
    ann = workdir / "cohort.json"
    heatmaps = workdir / "heatmaps"
    predicted = workdir / "cohort_with_predictions.json"
    report = workdir / "report.json"
    ba = workdir / "bland_altman.csv"
    manifest = workdir / "split.csv"

    steps = [
        (make_synthetic_cohort.main,
         [str(ann), "--patients", "40", "--seed", "1"]),
        (cli, ["encode", str(ann), str(heatmaps)]),
        (cli, ["decode", str(heatmaps), str(ann), str(predicted)]),
        (cli, ["split", str(ann), str(manifest), "--restarts", "200", "--seed", "1"]),
        (cli, ["evaluate", str(predicted), str(report),
               "--bland-altman-out", str(ba)]),
    ]
    for func, argv in steps:
        rc = func(argv)
        if rc != 0:
            print(f"step {argv[0]} failed with exit code {rc}", file=sys.stderr)
            return rc

    doc = json.loads(report.read_text())
    loc = doc["localisation"]
    print("\n--- demo summary ---")
    print(f"subjects: {doc['n_subjects']}")
    print(f"overall mean RE: {loc['overall_mean_re_mm']['display']} mm "
          f"(median {loc['overall_median_re_mm']['display']} mm)")
    for radius, sdr_cell in loc["sdr_pct"].items():
        print(f"SDR@{radius}mm: {sdr_cell['display']}%")
    for angle in ("alpha", "lce"):
        sec = doc["agreement"][angle]
        icc = sec["icc_2_1"]
        print(f"{angle}: MAE {sec['mae_deg']['display']} deg, "
              f"ICC {icc['value']['display']} ({icc['band']})")
    cam = doc["screening"]["cam"]
    print(f"cam screening: accuracy {cam['accuracy_pct']['display']}%, "
          f"counts {cam['counts']}")
    print(f"report: {report}")
    return 0


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="hipmetrics_demo_"))
    sys.exit(run(target))

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from hipmetrics import (
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
)
from hipmetrics.io_formats import write_annotations

# the cohort generator script doubles as the fixture image renderer
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "scripts"))
from make_synthetic_cohort import render_image, synth_landmarks  # noqa: E402


def build_cohort(directory: Path, n_subjects: int, seed: int, size: int = 512):
    """Annotation file + rendered PNGs for n single-timepoint subjects."""
    rng = np.random.default_rng(seed)
    geometry = ImageGeometry.fit_to_network(size, size, 0.4, 0.4)
    images_dir = directory / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(n_subjects):
        while True:
            made = synth_landmarks(rng, size, size, cam_like=bool(i % 2))
            if made is not None:
                break
        lm, head_radius = made
        key = f"s{i:03d}_t0"
        records.append(SubjectRecord(
            subject_id=f"s{i:03d}", image_key=key, modality="mri",
            geometry=geometry, ground_truth=lm,
        ))
        arr = render_image(rng, size, size, lm, head_radius)
        Image.fromarray(arr, mode="L").save(images_dir / f"{key}.png")
    ann = directory / "annotations.json"
    write_annotations(records, ann)
    return ann, images_dir, records

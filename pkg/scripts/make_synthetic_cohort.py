#!/usr/bin/env python3
"""Generate a synthetic annotated hip cohort for demos and harness training.

Writes an annotation file with a bimodal alpha-angle distribution (roughly
half normal hips, half cam-like morphology) and, optionally, matching
grayscale PNG images with bright blobs at the landmark positions so a
landmark detector has real signal to learn from.

Example:
    python scripts/make_synthetic_cohort.py cohort.json --patients 89 \
        --images-dir images/ --seed 7
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from hipmetrics import (
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
)
from hipmetrics.io_formats import write_annotations


def synth_landmarks(rng, width, height, cam_like):
    """Place the four landmarks with a controllable alpha angle."""
    cx = rng.uniform(0.35, 0.65) * width
    cy = rng.uniform(0.35, 0.65) * height
    radius = rng.uniform(0.10, 0.16) * min(width, height)

    # neck axis pointing inferior-medial
    neck_theta = math.radians(rng.uniform(150, 210))
    na = (cx + 2.2 * radius * math.sin(neck_theta),
          cy - 2.2 * radius * math.cos(neck_theta))

    # cam point on the head rim: alpha is the angle from the neck axis
    alpha = rng.uniform(70, 95) if cam_like else rng.uniform(35, 60)
    cam_theta = neck_theta + math.radians(alpha) * rng.choice([-1.0, 1.0])
    lcp = (cx + radius * math.sin(cam_theta), cy - radius * math.cos(cam_theta))

    # acetabular edge superior-lateral, LCE in a plausible range
    lce = rng.uniform(15, 50)
    lae_theta = math.radians(lce * rng.choice([-1.0, 1.0]))
    lae = (cx + 1.4 * radius * math.sin(lae_theta),
           cy - 1.4 * radius * math.cos(lae_theta))

    points = {
        LandmarkId.FHC: Point2(cx, cy),
        LandmarkId.NA: Point2(*na),
        LandmarkId.LAE: Point2(*lae),
        LandmarkId.LCP: Point2(*lcp),
    }
    for p in points.values():
        if not (0 <= p.x < width and 0 <= p.y < height):
            return None
    return LandmarkSet(points=points, frame=Frame.NATIVE), radius


def render_image(rng, width, height, lm, head_radius):
    """Grayscale image: femoral head disc plus distinct blobs per landmark."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    img = rng.normal(0.15, 0.03, size=(height, width))
    fhc = lm[LandmarkId.FHC]
    d_head = np.hypot(xs - fhc.x, ys - fhc.y)
    img += 0.25 * (d_head < head_radius)
    img += 0.15 * np.exp(-(d_head - head_radius) ** 2 / (2 * 2.0**2))  # rim
    intensities = {
        LandmarkId.FHC: 0.9, LandmarkId.NA: 0.7,
        LandmarkId.LAE: 0.8, LandmarkId.LCP: 0.6,
    }
    for lid, p in lm.points.items():
        d = (xs - p.x) ** 2 + (ys - p.y) ** 2
        img += intensities[lid] * np.exp(-d / (2 * 3.0**2))
    img = np.clip(img, 0.0, 1.0)
    return (img * 255).astype(np.uint8)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", help="annotation file to write")
    ap.add_argument("--patients", type=int, default=89)
    ap.add_argument("--max-timepoints", type=int, default=3)
    ap.add_argument("--modality", choices=["xray", "mri"], default="mri")
    ap.add_argument("--size", type=int, default=512,
                    help="native image side length (square images)")
    ap.add_argument("--spacing", type=float, default=0.4, help="mm per pixel")
    ap.add_argument("--images-dir", default=None,
                    help="also render PNG images here (needs Pillow)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    geometry = ImageGeometry.fit_to_network(
        args.size, args.size, args.spacing, args.spacing,
        slice_spacing=3.3 if args.modality == "mri" else None,
    )

    records = []
    renders = []
    for i in range(args.patients):
        cam_like = bool(rng.uniform() < 0.5)
        n_time = int(rng.integers(1, args.max_timepoints + 1))
        for t in range(n_time):
            for _attempt in range(100):
                made = synth_landmarks(rng, args.size, args.size, cam_like)
                if made is not None:
                    break
            else:
                raise RuntimeError("could not place landmarks inside the frame")
            lm, head_radius = made
            key = f"pat{i:03d}_t{t}"
            records.append(SubjectRecord(
                subject_id=f"pat{i:03d}",
                image_key=key,
                modality=args.modality,
                geometry=geometry,
                ground_truth=lm,
            ))
            renders.append((key, lm, head_radius))

    write_annotations(records, args.out)
    print(f"{args.out}: {len(records)} images, {args.patients} patients")

    if args.images_dir:
        from PIL import Image

        img_dir = Path(args.images_dir)
        img_dir.mkdir(parents=True, exist_ok=True)
        for key, lm, head_radius in renders:
            arr = render_image(rng, args.size, args.size, lm, head_radius)
            Image.fromarray(arr, mode="L").save(img_dir / f"{key}.png")
        print(f"{img_dir}: {len(renders)} images rendered")
    return 0


if __name__ == "__main__":
    sys.exit(main())

import numpy as np
import pytest

from hipmetrics import (
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
)


def make_landmarks(fhc=(250.0, 250.0), na=(250.0, 200.0), lae=(280.0, 220.0),
                   lcp=(285.0, 230.0), frame=Frame.NATIVE) -> LandmarkSet:
    return LandmarkSet(
        points={
            LandmarkId.FHC: Point2(*fhc),
            LandmarkId.NA: Point2(*na),
            LandmarkId.LAE: Point2(*lae),
            LandmarkId.LCP: Point2(*lcp),
        },
        frame=frame,
    )


def identity_geometry(size=512, spacing=1.0) -> ImageGeometry:
    return ImageGeometry(
        native_width=size,
        native_height=size,
        pixel_spacing_x=spacing,
        pixel_spacing_y=spacing,
        resize_scale=1.0,
    )


def random_landmarks(rng: np.random.Generator, width: int, height: int,
                     frame=Frame.NATIVE) -> LandmarkSet:
    """Non-degenerate landmark configuration inside the frame bounds."""
    margin = 0.15
    cx = rng.uniform(margin * width, (1 - margin) * width)
    cy = rng.uniform(margin * height, (1 - margin) * height)
    reach = 0.1 * min(width, height)

    def offset(angle_lo, angle_hi):
        theta = rng.uniform(np.radians(angle_lo), np.radians(angle_hi))
        r = rng.uniform(0.4 * reach, reach)
        return cx + r * np.sin(theta), cy - r * np.cos(theta)

    # NA inferior-medial, LAE and LCP superior-lateral: realistic-ish spread
    return LandmarkSet(
        points={
            LandmarkId.FHC: Point2(cx, cy),
            LandmarkId.NA: Point2(*offset(140, 220)),
            LandmarkId.LAE: Point2(*offset(10, 60)),
            LandmarkId.LCP: Point2(*offset(25, 80)),
        },
        frame=frame,
    )


def make_record(rng: np.random.Generator, subject_id: str, image_key: str,
                modality: str = "xray", with_prediction: bool = False,
                noise_px: float = 0.0) -> SubjectRecord:
    w = int(rng.integers(300, 900))
    h = int(rng.integers(300, 900))
    spacing = float(rng.uniform(0.1, 0.8))
    geometry = ImageGeometry.fit_to_network(w, h, spacing, spacing)
    gt = random_landmarks(rng, w, h)
    predicted = None
    if with_prediction:
        pts = {}
        for lid, p in gt.points.items():
            x = float(np.clip(p[0] + rng.normal(0, noise_px), 0, w - 1))
            y = float(np.clip(p[1] + rng.normal(0, noise_px), 0, h - 1))
            pts[lid] = Point2(x, y)
        predicted = LandmarkSet(points=pts, frame=Frame.NATIVE)
    return SubjectRecord(
        subject_id=subject_id,
        image_key=image_key,
        modality=modality,
        geometry=geometry,
        ground_truth=gt,
        predicted=predicted,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)

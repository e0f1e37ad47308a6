"""Shared domain types and coordinate-frame conventions.

Conventions used everywhere in this package:

* x is the column coordinate (rightward), y is the row coordinate (downward),
  origin at the top-left pixel. This matches raster storage order; the angle
  code in :mod:`hipmetrics.geometry` is written for this y-down frame.
* Two frames exist: the image's ``native`` frame and the fixed 512x512
  ``network512`` frame the model operates in. The native->network mapping is
  the affine resize/pad recorded in :class:`ImageGeometry`.
* Angles are stored in degrees; radians appear only inside trig calls.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

from .errors import FrameError, MetadataError

NETWORK_SIZE = 512

ALPHA_THRESHOLD_DEG = 65.0
LCE_THRESHOLD_DEG = 40.0


class LandmarkId(enum.Enum):
    """The four hip landmarks. Closed set; collections carry one entry each."""

    FHC = "FHC"  # femoral head centre
    NA = "NA"  # neck-axis point
    LAE = "LAE"  # lateral acetabular edge
    LCP = "LCP"  # lateral cam point


# Canonical ordering used for file layouts and report rows.
LANDMARK_ORDER = (LandmarkId.FHC, LandmarkId.NA, LandmarkId.LAE, LandmarkId.LCP)


class Frame(enum.Enum):
    NATIVE = "native"
    NETWORK512 = "network512"


class Point2(NamedTuple):
    """Continuous pixel coordinate: x = column, y = row."""

    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class LandmarkSet:
    """All four landmarks expressed in one declared frame."""

    points: Mapping[LandmarkId, Point2]
    frame: Frame

    def __post_init__(self):
        missing = [lid.value for lid in LANDMARK_ORDER if lid not in self.points]
        if missing:
            raise FrameError(f"landmark set missing {', '.join(missing)}")
        extra = [k for k in self.points if not isinstance(k, LandmarkId)]
        if extra:
            raise FrameError(f"landmark set has unknown keys: {extra}")
        for lid, p in self.points.items():
            if not Point2(*p).is_finite():
                raise FrameError(f"{lid.value} coordinate is not finite: {p}")
            if p[0] < 0 or p[1] < 0:
                raise FrameError(f"{lid.value} has negative coordinate: {p}")

    def __getitem__(self, lid: LandmarkId) -> Point2:
        return Point2(*self.points[lid])


@dataclass(frozen=True)
class ImageGeometry:
    """Native image size, physical spacing, and the resize/pad into 512x512.

    ``resize_scale``, ``pad_left`` and ``pad_top`` define the affine map
    native -> network: p_net = p_native * resize_scale + (pad_left, pad_top).
    Pixel spacing is mm per native pixel and is mandatory per subject; it is
    acquisition metadata, not a constant.
    """

    native_width: int
    native_height: int
    pixel_spacing_x: float
    pixel_spacing_y: float
    resize_scale: float
    pad_left: float = 0.0
    pad_top: float = 0.0
    slice_spacing: Optional[float] = None  # mm between slices, volumes only

    def __post_init__(self):
        if self.native_width <= 0 or self.native_height <= 0:
            raise MetadataError("native size must be positive")
        if self.pixel_spacing_x <= 0 or self.pixel_spacing_y <= 0:
            raise MetadataError("pixel spacing must be positive mm/pixel")
        if self.resize_scale <= 0:
            raise MetadataError("resize_scale must be positive")
        if self.slice_spacing is not None and self.slice_spacing <= 0:
            raise MetadataError("slice_spacing must be positive when given")

    @property
    def isotropic(self) -> bool:
        return self.pixel_spacing_x == self.pixel_spacing_y

    @classmethod
    def fit_to_network(
        cls,
        native_width: int,
        native_height: int,
        pixel_spacing_x: float,
        pixel_spacing_y: float,
        slice_spacing: Optional[float] = None,
    ) -> "ImageGeometry":
        """Aspect-preserving resize to the 512x512 frame with centred padding."""
        scale = NETWORK_SIZE / max(native_width, native_height)
        return cls(
            native_width=native_width,
            native_height=native_height,
            pixel_spacing_x=pixel_spacing_x,
            pixel_spacing_y=pixel_spacing_y,
            resize_scale=scale,
            pad_left=(NETWORK_SIZE - native_width * scale) / 2.0,
            pad_top=(NETWORK_SIZE - native_height * scale) / 2.0,
            slice_spacing=slice_spacing,
        )


@dataclass(frozen=True)
class AnglePair:
    """Alpha and LCE angle in degrees plus their morphology flags.

    Flags must be pure functions of the angles: construct through
    :func:`hipmetrics.geometry.classify` rather than by hand.
    """

    alpha_deg: float
    lce_deg: float
    cam_positive: bool
    pincer_positive: bool

    def __post_init__(self):
        if not (0.0 <= self.alpha_deg <= 180.0):
            raise ValueError(f"alpha_deg outside [0,180]: {self.alpha_deg}")
        if not (0.0 <= self.lce_deg <= 180.0):
            raise ValueError(f"lce_deg outside [0,180]: {self.lce_deg}")


@dataclass
class SubjectRecord:
    """One annotated image.

    ``subject_id`` identifies the patient and may repeat across records when a
    patient contributed several time points; ``image_key`` is unique per
    record. Ground truth is always present; ``predicted`` appears once a model
    (or the decode command) has produced landmarks.
    """

    subject_id: str
    image_key: str
    modality: str  # "xray" | "mri"
    geometry: ImageGeometry
    ground_truth: LandmarkSet
    predicted: Optional[LandmarkSet] = None
    clinician_angles: Optional[AnglePair] = None
    gt_angles: Optional[AnglePair] = field(default=None, repr=False)
    pred_angles: Optional[AnglePair] = field(default=None, repr=False)


def _check_native_bounds(p: Point2, g: ImageGeometry) -> None:
    if not (0.0 <= p.x < g.native_width and 0.0 <= p.y < g.native_height):
        raise FrameError(
            f"point {p} outside native bounds "
            f"[0,{g.native_width})x[0,{g.native_height})"
        )


def native_to_network(p: Point2, g: ImageGeometry) -> Point2:
    """Map a native-frame point into the 512x512 network frame."""
    p = Point2(*p)
    _check_native_bounds(p, g)
    q = Point2(p.x * g.resize_scale + g.pad_left, p.y * g.resize_scale + g.pad_top)
    if not (0.0 <= q.x < NETWORK_SIZE and 0.0 <= q.y < NETWORK_SIZE):
        raise FrameError(f"geometry maps {p} outside the network frame: {q}")
    return q


def network_to_native(p: Point2, g: ImageGeometry) -> Point2:
    """Exact inverse of :func:`native_to_network`.

    Points inside the padding border have no native preimage and raise
    :class:`FrameError`.
    """
    p = Point2(*p)
    if not (0.0 <= p.x < NETWORK_SIZE and 0.0 <= p.y < NETWORK_SIZE):
        raise FrameError(f"point {p} outside the network frame")
    q = Point2((p.x - g.pad_left) / g.resize_scale, (p.y - g.pad_top) / g.resize_scale)
    eps = 1e-9
    if not (-eps <= q.x < g.native_width + eps and -eps <= q.y < g.native_height + eps):
        raise FrameError(f"point {p} lies in the padding region (native preimage {q})")
    return q


def landmarks_to_native(lm: LandmarkSet, g: ImageGeometry) -> LandmarkSet:
    if lm.frame is Frame.NATIVE:
        return lm
    return LandmarkSet(
        points={lid: network_to_native(lm[lid], g) for lid in LANDMARK_ORDER},
        frame=Frame.NATIVE,
    )


def landmarks_to_network(lm: LandmarkSet, g: ImageGeometry) -> LandmarkSet:
    if lm.frame is Frame.NETWORK512:
        return lm
    return LandmarkSet(
        points={lid: native_to_network(lm[lid], g) for lid in LANDMARK_ORDER},
        frame=Frame.NETWORK512,
    )


def pixels_to_mm(d, g: ImageGeometry, frame: Frame = Frame.NATIVE) -> float:
    """Convert a pixel distance or (dx, dy) displacement to millimetres.

    Scalar distances assume isotropic spacing; displacements are scaled per
    axis before the Euclidean norm. Network-frame inputs are divided by
    ``resize_scale`` first so the result is always a native-frame distance.
    """
    inv = 1.0 / g.resize_scale if frame is Frame.NETWORK512 else 1.0
    if isinstance(d, (int, float)):
        if d < 0:
            raise ValueError("distance must be non-negative")
        if not g.isotropic:
            raise MetadataError(
                "scalar distance needs isotropic spacing; convert the "
                "displacement per axis instead"
            )
        return float(d) * inv * g.pixel_spacing_x
    dx, dy = d
    return math.hypot(dx * inv * g.pixel_spacing_x, dy * inv * g.pixel_spacing_y)

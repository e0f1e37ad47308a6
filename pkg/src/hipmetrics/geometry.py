"""Alpha-angle and LCE-angle computation plus cam/pincer classification.

All math lives in the y-down raster frame (x = column, y = row). The LCE
angle references the image vertical axis, which under this convention is the
direction (0, -1): toward the top of the image, i.e. superior on a correctly
oriented coronal view. Both angles are unsigned, in [0, 180] degrees;
laterality needs no special handling because unsigned angles are mirror
invariant.

Angles should be measured in the native frame: callers holding network-frame
landmarks map them back first (``landmarks_to_native``). Anisotropic pixel
spacing is applied to displacements before the trigonometry so the result is
a true anatomical angle.
"""

from __future__ import annotations

import math
from typing import Optional

from .core import (
    ALPHA_THRESHOLD_DEG,
    LCE_THRESHOLD_DEG,
    AnglePair,
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    landmarks_to_native,
)
from .errors import GeometryError

_DEGENERATE_EPS = 1e-12


def _displacement(lm: LandmarkSet, tip: LandmarkId, g: Optional[ImageGeometry]):
    fhc = lm[LandmarkId.FHC]
    p = lm[tip]
    dx, dy = p.x - fhc.x, p.y - fhc.y
    if g is not None:
        dx *= g.pixel_spacing_x
        dy *= g.pixel_spacing_y
    return dx, dy


def _angle_between(ax: float, ay: float, bx: float, by: float) -> float:
    na = math.hypot(ax, ay)
    nb = math.hypot(bx, by)
    if na < _DEGENERATE_EPS or nb < _DEGENERATE_EPS:
        raise GeometryError("zero-length measurement vector")
    # atan2(|cross|, dot) is the arccos of the clamped normalised dot product
    # but stays well conditioned at 0 and 180 degrees
    cross = ax * by - ay * bx
    dot = ax * bx + ay * by
    return math.degrees(math.atan2(abs(cross), dot))


def alpha_angle(lm: LandmarkSet, geometry: Optional[ImageGeometry] = None) -> float:
    """Angle between the neck axis (FHC->NA) and the cam vector (FHC->LCP)."""
    ax, ay = _displacement(lm, LandmarkId.NA, geometry)
    bx, by = _displacement(lm, LandmarkId.LCP, geometry)
    return _angle_between(ax, ay, bx, by)


def lce_angle(lm: LandmarkSet, geometry: Optional[ImageGeometry] = None) -> float:
    """Unsigned angle between the vertical axis and the coverage vector FHC->LAE."""
    vx, vy = _displacement(lm, LandmarkId.LAE, geometry)
    return _angle_between(vx, vy, 0.0, -1.0)


def classify(
    alpha_deg: float,
    lce_deg: float,
    alpha_threshold: float = ALPHA_THRESHOLD_DEG,
    lce_threshold: float = LCE_THRESHOLD_DEG,
) -> AnglePair:
    """Attach cam/pincer flags; comparisons are strict, boundaries are negative."""
    return AnglePair(
        alpha_deg=alpha_deg,
        lce_deg=lce_deg,
        cam_positive=alpha_deg > alpha_threshold,
        pincer_positive=lce_deg > lce_threshold,
    )


def angles_for(
    lm: LandmarkSet,
    geometry: Optional[ImageGeometry] = None,
    alpha_threshold: float = ALPHA_THRESHOLD_DEG,
    lce_threshold: float = LCE_THRESHOLD_DEG,
) -> AnglePair:
    """Both clinical angles plus flags for one landmark set.

    When ``geometry`` is given, network-frame landmarks are mapped to the
    native frame and pixel spacing is applied to the displacements.
    """
    if geometry is not None and lm.frame is Frame.NETWORK512:
        lm = landmarks_to_native(lm, geometry)
    return classify(
        alpha_angle(lm, geometry),
        lce_angle(lm, geometry),
        alpha_threshold,
        lce_threshold,
    )

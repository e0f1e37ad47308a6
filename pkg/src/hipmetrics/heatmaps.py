"""Gaussian heatmap encoding, argmax decoding, NLL scoring and TTA averaging.

Heatmaps are plain ``float32`` numpy arrays of shape (height, width), row
major, so ``h[y, x]`` reads the score at column x, row y. Encoded ground
truth is the unnormalised Gaussian

    H(i, j) = exp(-((i - y)^2 + (j - x)^2) / (2 sigma^2))

evaluated at every integer pixel (i = row, j = column); the peak is 1.0 when
the landmark sits on an integer pixel and is not renormalised to sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .core import LANDMARK_ORDER, NETWORK_SIZE, LandmarkId, Point2
from .errors import CodecError, ConfigError


@dataclass(frozen=True)
class GaussianSpec:
    """Spread of the encoded target Gaussian, in pixels."""

    sigma: float = 5.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ConfigError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class AugmentationRanges:
    """Uniform sampling ranges for the stochastic affine augmentations.

    Translation is a fraction of the image side. The same ranges drive
    test-time augmentation here and training-time augmentation in the model
    harness.
    """

    scale: tuple[float, float] = (0.95, 1.05)
    translation_frac: float = 0.05
    rotation_deg: float = 10.0
    shear_deg: float = 5.0


@dataclass(frozen=True)
class AffineTransform2D:
    """2x3 affine map in absolute pixel coordinates: p' = A @ (x, y, 1).

    ``matrix`` rows are (a, b, c) and (d, e, f) so x' = a x + b y + c and
    y' = d x + e y + f. Construction from sampled parameters bakes the
    about-the-image-centre convention into the translation column, so the six
    stored reals fully determine the map (this is what the heatmap file format
    serialises).
    """

    matrix: tuple[tuple[float, float, float], tuple[float, float, float]]

    def __post_init__(self):
        (a, b, _), (d, e, _) = self.matrix
        if abs(a * e - b * d) < 1e-12:
            raise CodecError("affine transform is singular")

    @classmethod
    def identity(cls) -> "AffineTransform2D":
        return cls(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)))

    @classmethod
    def from_params(
        cls,
        scale: float = 1.0,
        rotation_deg: float = 0.0,
        shear_deg: float = 0.0,
        translate_x: float = 0.0,
        translate_y: float = 0.0,
        center: tuple[float, float] = ((NETWORK_SIZE - 1) / 2.0,) * 2,
    ) -> "AffineTransform2D":
        """Compose scale -> rotation -> shear -> translation about ``center``."""
        r = math.radians(rotation_deg)
        sh = math.tan(math.radians(shear_deg))
        cos_r, sin_r = math.cos(r), math.sin(r)
        # linear part L = Shear @ Rotation @ Scale
        la = scale * (cos_r + sh * sin_r)
        lb = scale * (-sin_r + sh * cos_r)
        lc = scale * sin_r
        ld = scale * cos_r
        cx, cy = center
        tx = translate_x + cx - (la * cx + lb * cy)
        ty = translate_y + cy - (lc * cx + ld * cy)
        return cls(((la, lb, tx), (lc, ld, ty)))

    def is_identity(self) -> bool:
        return self.matrix == ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))

    def apply(self, p: Point2) -> Point2:
        (a, b, c), (d, e, f) = self.matrix
        return Point2(a * p[0] + b * p[1] + c, d * p[0] + e * p[1] + f)

    def inverse(self) -> "AffineTransform2D":
        (a, b, c), (d, e, f) = self.matrix
        det = a * e - b * d
        ia, ib = e / det, -b / det
        id_, ie = -d / det, a / det
        return AffineTransform2D(
            ((ia, ib, -(ia * c + ib * f)), (id_, ie, -(id_ * c + ie * f)))
        )

    def flat(self) -> tuple[float, ...]:
        (a, b, c), (d, e, f) = self.matrix
        return (a, b, c, d, e, f)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "AffineTransform2D":
        a, b, c, d, e, f = (float(v) for v in values)
        return cls(((a, b, c), (d, e, f)))


@dataclass
class HeatmapStack:
    """One heatmap per landmark plus the view transform that produced them.

    ``view_transform`` maps original network-frame coordinates into this
    view's coordinates; it is the identity for non-augmented views.
    """

    heatmaps: Mapping[LandmarkId, np.ndarray]
    view_transform: AffineTransform2D = field(default_factory=AffineTransform2D.identity)

    def __post_init__(self):
        shapes = {np.asarray(h).shape for h in self.heatmaps.values()}
        if len(shapes) > 1:
            raise CodecError(f"heatmaps in a stack must share dimensions, got {shapes}")

    @property
    def shape(self) -> tuple[int, int]:
        first = next(iter(self.heatmaps.values()))
        return np.asarray(first).shape  # type: ignore[return-value]


def encode(
    landmark: Point2,
    width: int = NETWORK_SIZE,
    height: int = NETWORK_SIZE,
    spec: GaussianSpec = GaussianSpec(),
) -> np.ndarray:
    """Encode one landmark as an unnormalised Gaussian heatmap."""
    x, y = float(landmark[0]), float(landmark[1])
    if not (0.0 <= x < width and 0.0 <= y < height):
        raise CodecError(f"landmark ({x}, {y}) outside [0,{width})x[0,{height})")
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    d2 = (rows[:, None] - y) ** 2 + (cols[None, :] - x) ** 2
    return np.exp(-d2 / (2.0 * spec.sigma**2)).astype(np.float32)


def encode_landmarks(
    landmarks: Mapping[LandmarkId, Point2],
    width: int = NETWORK_SIZE,
    height: int = NETWORK_SIZE,
    spec: GaussianSpec = GaussianSpec(),
) -> HeatmapStack:
    return HeatmapStack(
        heatmaps={lid: encode(landmarks[lid], width, height, spec) for lid in LANDMARK_ORDER}
    )


def decode_argmax(heatmap: np.ndarray) -> Point2:
    """Integer-pixel location of the maximum score.

    Ties break to the smallest row-major index (smallest y, then smallest x).
    Sub-pixel refinement is deliberately out of scope.
    """
    h = np.asarray(heatmap)
    if h.size == 0:
        raise CodecError("cannot decode an empty heatmap")
    if np.isnan(h).any():
        raise CodecError("heatmap contains NaN")
    flat = int(np.argmax(h))  # first occurrence in row-major order
    y, x = divmod(flat, h.shape[1])
    return Point2(float(x), float(y))


def nll_score(predicted: np.ndarray, target_landmark: Point2) -> float:
    """Negative log probability of the target pixel under a spatial softmax.

    The predicted grid is treated as unnormalised log-scores; the probability
    is read at the integer pixel nearest the target. Always >= 0 and invariant
    to adding a constant to the whole grid.
    """
    h = np.asarray(predicted, dtype=np.float64)
    if not np.isfinite(h).all():
        raise CodecError("heatmap contains non-finite values")
    tx, ty = int(round(target_landmark[0])), int(round(target_landmark[1]))
    if not (0 <= tx < h.shape[1] and 0 <= ty < h.shape[0]):
        raise CodecError(f"target pixel ({tx}, {ty}) outside the grid {h.shape}")
    m = h.max()
    log_z = m + math.log(np.exp(h - m).sum())
    return float(log_z - h[ty, tx])


@dataclass(frozen=True)
class TtaParams:
    scale: float
    rotation_deg: float
    shear_deg: float
    translate_x: float
    translate_y: float


def sample_tta_params(
    rng: Union[int, np.random.Generator],
    ranges: AugmentationRanges = AugmentationRanges(),
    width: int = NETWORK_SIZE,
    height: int = NETWORK_SIZE,
) -> TtaParams:
    """Draw one set of augmentation parameters, uniform within the ranges."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    lo, hi = ranges.scale
    return TtaParams(
        scale=float(gen.uniform(lo, hi)),
        rotation_deg=float(gen.uniform(-ranges.rotation_deg, ranges.rotation_deg)),
        shear_deg=float(gen.uniform(-ranges.shear_deg, ranges.shear_deg)),
        translate_x=float(gen.uniform(-ranges.translation_frac, ranges.translation_frac) * width),
        translate_y=float(gen.uniform(-ranges.translation_frac, ranges.translation_frac) * height),
    )


def sample_tta_transform(
    rng: Union[int, np.random.Generator],
    ranges: AugmentationRanges = AugmentationRanges(),
    width: int = NETWORK_SIZE,
    height: int = NETWORK_SIZE,
) -> AffineTransform2D:
    """Sample a random view transform about the image centre."""
    p = sample_tta_params(rng, ranges, width, height)
    return AffineTransform2D.from_params(
        scale=p.scale,
        rotation_deg=p.rotation_deg,
        shear_deg=p.shear_deg,
        translate_x=p.translate_x,
        translate_y=p.translate_y,
        center=((width - 1) / 2.0, (height - 1) / 2.0),
    )


def warp_heatmap(heatmap: np.ndarray, transform: AffineTransform2D) -> np.ndarray:
    """Resample a heatmap under an affine transform.

    Output pixel q is bilinearly sampled from the input at transform^-1(q),
    i.e. a peak at p moves to transform(p). Pixels mapping outside the source
    fill with zero; predicted heatmaps may hold negative scores and still use
    zero fill. The identity transform returns a bit-identical copy.
    """
    h = np.asarray(heatmap)
    if transform.is_identity():
        return h.copy()
    inv = transform.inverse()
    (a, b, c), (d, e, f) = inv.matrix
    height, width = h.shape
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    src_x = a * xs[None, :] + b * ys[:, None] + c
    src_y = d * xs[None, :] + e * ys[:, None] + f

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0

    out = np.zeros((height, width), dtype=np.float64)
    src = h.astype(np.float64)
    for dy_, dx_, w in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx_
        yi = y0 + dy_
        valid = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
        contrib = np.zeros_like(out)
        contrib[valid] = src[yi[valid], xi[valid]] * w[valid]
        out += contrib
    return out.astype(np.float32)


def warp_stack(stack: HeatmapStack, transform: AffineTransform2D) -> HeatmapStack:
    return HeatmapStack(
        heatmaps={lid: warp_heatmap(h, transform) for lid, h in stack.heatmaps.items()},
        view_transform=AffineTransform2D.identity(),
    )


def tta_aggregate(views: Sequence[HeatmapStack]) -> HeatmapStack:
    """Average augmented views back in the original network frame.

    Each view's heatmaps are warped by the inverse of its view transform and
    the results are averaged pixelwise; the output carries the identity view
    transform.
    """
    if len(views) == 0:
        raise CodecError("tta_aggregate needs at least one view")
    shape = views[0].shape
    lids = tuple(views[0].heatmaps.keys())
    for v in views:
        if v.shape != shape:
            raise CodecError(f"view dimensions differ: {v.shape} vs {shape}")
        if tuple(v.heatmaps.keys()) != lids:
            raise CodecError("views carry different landmark sets")
    acc = {lid: np.zeros(shape, dtype=np.float64) for lid in lids}
    for v in views:
        inv = v.view_transform.inverse()
        for lid in lids:
            acc[lid] += warp_heatmap(v.heatmaps[lid], inv).astype(np.float64)
    n = float(len(views))
    return HeatmapStack(
        heatmaps={lid: (acc[lid] / n).astype(np.float32) for lid in lids},
        view_transform=AffineTransform2D.identity(),
    )

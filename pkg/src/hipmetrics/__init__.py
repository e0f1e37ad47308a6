"""Hip landmark measurement toolkit.

Encodes and decodes landmark heatmaps, computes the alpha and LCE angles from
the four hip landmarks (FHC, NA, LAE, LCP), and evaluates predictions at
three levels: landmark localisation, angle agreement, and diagnostic
screening.
"""

from .core import (
    ALPHA_THRESHOLD_DEG,
    LANDMARK_ORDER,
    LCE_THRESHOLD_DEG,
    NETWORK_SIZE,
    AnglePair,
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
    native_to_network,
    network_to_native,
    pixels_to_mm,
)
from .errors import (
    CodecError,
    ConfigError,
    EvaluationError,
    FormatError,
    FrameError,
    GeometryError,
    HipMetricsError,
    MetadataError,
    SplitError,
    StatsError,
)
from .geometry import alpha_angle, angles_for, classify, lce_angle
from .heatmaps import (
    AffineTransform2D,
    AugmentationRanges,
    GaussianSpec,
    HeatmapStack,
    decode_argmax,
    encode,
    encode_landmarks,
    nll_score,
    sample_tta_params,
    sample_tta_transform,
    tta_aggregate,
    warp_heatmap,
)

__version__ = "0.1.0"

"""Training and inference harness for hip landmark heatmap regression."""

from .config import IntensityJitter, TrainConfig
from .loss import heatmap_nll, mean_radial_error_px
from .model import build_model

__version__ = "0.1.0"

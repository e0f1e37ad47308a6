"""Exception hierarchy for the toolkit.

Every failure mode raised by library code derives from HipMetricsError so
callers (and the CLI) can map errors to exit codes without string matching.
"""

from __future__ import annotations


class HipMetricsError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HipMetricsError):
    """Invalid configuration value (bad sigma, ratios not summing to 1, ...)."""


class FrameError(HipMetricsError):
    """A point lies outside its declared coordinate frame, or frames mismatch."""


class MetadataError(HipMetricsError):
    """Required image metadata (e.g. pixel spacing) is missing or unusable."""


class CodecError(HipMetricsError):
    """Heatmap encode/decode/score/warp/aggregation failure."""


class GeometryError(HipMetricsError):
    """Degenerate landmark configuration (zero-length measurement vector)."""


class EvaluationError(HipMetricsError):
    """Malformed evaluation input (empty cohort, length mismatch, ...)."""


class StatsError(HipMetricsError):
    """Statistical computation cannot proceed.

    ``degenerate`` is True when the failure is a degenerate-variance condition
    (e.g. zero total variance in the ICC ANOVA) rather than malformed input.
    """

    def __init__(self, message: str, *, degenerate: bool = False):
        super().__init__(message)
        self.degenerate = degenerate


class SplitError(HipMetricsError):
    """Infeasible split request (a partition would be empty)."""


class FormatError(HipMetricsError):
    """File parse or validation failure. Readers never return partial data."""

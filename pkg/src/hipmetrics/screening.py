"""Threshold-screening evaluation: confusion counts and derived rates.

Rates whose denominator is zero are reported as absent (None), never as 0 or
NaN, so degenerate cohorts cannot masquerade as perfect ones. Full-precision
values are kept; two-decimal half-up rounding happens only at display time.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

from .errors import EvaluationError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ScreeningReport:
    counts: ConfusionCounts
    accuracy: float  # percent
    sensitivity: Optional[float]
    specificity: Optional[float]
    ppv: Optional[float]
    npv: Optional[float]


def confusion(pred_flags: Sequence[bool], gt_flags: Sequence[bool]) -> ConfusionCounts:
    """Standard 2x2 counting; positive means the flag is True."""
    if len(pred_flags) != len(gt_flags):
        raise EvaluationError(
            f"flag lengths differ: {len(pred_flags)} vs {len(gt_flags)}"
        )
    if len(pred_flags) == 0:
        raise EvaluationError("cannot build a confusion matrix from zero subjects")
    tp = fp = tn = fn = 0
    for p, g in zip(pred_flags, gt_flags):
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
        elif not p and g:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _rate(numer: int, denom: int) -> Optional[float]:
    return 100.0 * numer / denom if denom > 0 else None


def rates(c: ConfusionCounts) -> ScreeningReport:
    if c.total < 1:
        raise EvaluationError("rates need at least one subject")
    return ScreeningReport(
        counts=c,
        accuracy=100.0 * (c.tp + c.tn) / c.total,
        sensitivity=_rate(c.tp, c.tp + c.fn),
        specificity=_rate(c.tn, c.tn + c.fp),
        ppv=_rate(c.tp, c.tp + c.fp),
        npv=_rate(c.tn, c.tn + c.fn),
    )


def display_percent(value: Optional[float]) -> Optional[str]:
    """Two decimals, half-up: 54.545 -> '54.55'. None stays absent."""
    if value is None:
        return None
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))

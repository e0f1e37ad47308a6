"""Angle-agreement statistics for paired model-vs-clinician measurements.

Covers mean absolute error, median absolute difference, ICC(2,1) via the
two-way random-effects ANOVA decomposition, and Bland-Altman analysis (bias,
95% limits of agreement, proportional-bias regression). Differences follow
the convention predicted minus ground truth, so a model that underestimates
the clinician shows a negative bias.

The proportional-bias p-value needs the Student-t tail; it is computed here
from the regularised incomplete beta function (continued-fraction expansion)
rather than pulled from a statistics library, and the test suite checks it
against direct numerical integration of the t density.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import StatsError

LOA_FACTOR = 1.96  # 95% limits of agreement


class ReliabilityBand(enum.Enum):
    POOR = "poor"
    FAIR = "fair"
    GOOD = "good"
    EXCELLENT = "excellent"


@dataclass(frozen=True)
class PairedSeries:
    """Paired measurements of the same subjects by two raters (model, clinician)."""

    rater_a: np.ndarray  # model / predicted
    rater_b: np.ndarray  # clinician / ground truth
    subject_ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        a = np.asarray(self.rater_a, dtype=np.float64)
        b = np.asarray(self.rater_b, dtype=np.float64)
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
            raise StatsError("paired series needs two equal-length 1-d samples")
        if a.size == 0:
            raise StatsError("paired series is empty")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise StatsError("paired series contains non-finite values")
        object.__setattr__(self, "rater_a", a)
        object.__setattr__(self, "rater_b", b)
        if self.subject_ids is not None:
            ids = tuple(self.subject_ids)
            if len(ids) != a.size:
                raise StatsError("subject_ids length mismatch")
            if len(set(ids)) != len(ids):
                # Multi-timepoint patients: each image is still treated as one
                # subject, but the repeat should not pass silently.
                warnings.warn(
                    "duplicate subject_ids in paired series; each image is "
                    "treated as an independent subject",
                    stacklevel=2,
                )
            object.__setattr__(self, "subject_ids", ids)

    @property
    def n(self) -> int:
        return int(self.rater_a.size)


@dataclass(frozen=True)
class IccResult:
    icc: float
    ms_rows: float
    ms_cols: float
    ms_error: float
    band: ReliabilityBand


@dataclass(frozen=True)
class BlandAltmanResult:
    n: int
    bias: float
    sd_diff: float
    loa_low: float
    loa_high: float
    slope: Optional[float]
    intercept: Optional[float]
    slope_p: Optional[float]
    regression_degenerate: bool  # all means identical; slope undefined


def mae(series: PairedSeries) -> float:
    return float(np.mean(np.abs(series.rater_a - series.rater_b)))


def median_abs_diff(series: PairedSeries) -> float:
    # numpy's median averages the two middle order statistics for even n
    return float(np.median(np.abs(series.rater_a - series.rater_b)))


def reliability_band(icc: float) -> ReliabilityBand:
    """Clinical reliability band for an ICC value.

    poor < 0.40 <= fair < 0.60 <= good < 0.75 <= excellent. The 0.75 boundary
    is assigned to excellent.
    """
    if not math.isfinite(icc):
        raise StatsError(f"ICC must be finite, got {icc}")
    if icc < 0.40:
        return ReliabilityBand.POOR
    if icc < 0.60:
        return ReliabilityBand.FAIR
    if icc < 0.75:
        return ReliabilityBand.GOOD
    return ReliabilityBand.EXCELLENT


def icc_two_way_random(values: np.ndarray) -> IccResult:
    """ICC(2,1): two-way random effects, absolute agreement, single measurement.

    ``values`` is an (n subjects) x (k raters) table. Variance is partitioned
    into between-subject (rows), between-rater (columns) and residual mean
    squares; the coefficient is

        (MSR - MSE) / (MSR + (k-1) MSE + (k/n)(MSC - MSE))
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise StatsError("ICC needs at least 2 subjects and 2 raters")
    if not np.isfinite(x).all():
        raise StatsError("ICC table contains non-finite values")
    n, k = x.shape
    grand = x.mean()
    ss_total = float(((x - grand) ** 2).sum())
    if ss_total <= 0.0:
        raise StatsError(
            "zero total variance: all measurements identical, ICC undefined",
            degenerate=True,
        )
    row_means = x.mean(axis=1)
    col_means = x.mean(axis=0)
    ss_rows = k * float(((row_means - grand) ** 2).sum())
    ss_cols = n * float(((col_means - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols
    msr = ss_rows / (n - 1)
    msc = ss_cols / (k - 1)
    mse = max(ss_err, 0.0) / ((n - 1) * (k - 1))  # guard tiny negative rounding
    denom = msr + (k - 1) * mse + (k / n) * (msc - mse)
    if denom == 0.0:
        raise StatsError("degenerate ANOVA: zero denominator", degenerate=True)
    icc = (msr - mse) / denom
    return IccResult(icc=float(icc), ms_rows=msr, ms_cols=msc, ms_error=mse,
                     band=reliability_band(float(icc)))


def icc_2_1(series: PairedSeries) -> IccResult:
    if series.n < 2:
        raise StatsError("ICC needs at least 2 subjects")
    return icc_two_way_random(np.stack([series.rater_a, series.rater_b], axis=1))


def ols_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Ordinary least squares fit y = slope*x + intercept (closed form)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise StatsError("regression degenerate: predictor has zero variance",
                         degenerate=True)
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    return slope, float(ym - slope * xm)


def bland_altman(series: PairedSeries) -> BlandAltmanResult:
    """Bias, 95% limits of agreement and proportional-bias regression.

    Differences are rater_a - rater_b; the limits use the sample (n-1)
    standard deviation. The regression of difference on pairwise mean tests
    whether the error grows with the measured value; its p-value needs
    n >= 3 (one residual degree of freedom). When every pairwise mean is
    identical the regression is undefined and only bias/LoA are returned.
    """
    if series.n < 2:
        raise StatsError("Bland-Altman needs at least 2 pairs")
    d = series.rater_a - series.rater_b
    m = (series.rater_a + series.rater_b) / 2.0
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    loa_low, loa_high = bias - LOA_FACTOR * sd, bias + LOA_FACTOR * sd

    slope = intercept = slope_p = None
    degenerate = False
    try:
        slope, intercept = ols_line(m, d)
    except StatsError:
        degenerate = True
    if slope is not None and series.n >= 3:
        resid = d - (slope * m + intercept)
        df = series.n - 2
        sxx = float(((m - m.mean()) ** 2).sum())
        se = math.sqrt(float((resid**2).sum()) / df / sxx)
        if se == 0.0:
            slope_p = 1.0 if slope == 0.0 else 0.0
        else:
            slope_p = student_t_two_sided_p(slope / se, df)
    return BlandAltmanResult(
        n=series.n,
        bias=bias,
        sd_diff=sd,
        loa_low=loa_low,
        loa_high=loa_high,
        slope=slope,
        intercept=intercept,
        slope_p=slope_p,
        regression_degenerate=degenerate,
    )


# --- Student-t tail via the regularised incomplete beta function ------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise StatsError("incomplete beta continued fraction failed to converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise StatsError("betainc parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise StatsError(f"betainc x outside [0,1]: {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for a Student-t variable with ``df`` degrees of freedom."""
    if df < 1:
        raise StatsError("degrees of freedom must be >= 1")
    if math.isinf(t):
        return 0.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def student_t_cdf(t: float, df: int) -> float:
    """P(T <= t) for a Student-t variable with ``df`` degrees of freedom."""
    p_two = student_t_two_sided_p(t, df)
    return 1.0 - 0.5 * p_two if t >= 0 else 0.5 * p_two


def bland_altman_rows(series: PairedSeries) -> list[tuple[float, float]]:
    """(pairwise mean, difference) rows, one per subject, for export/plotting."""
    m = (series.rater_a + series.rater_b) / 2.0
    d = series.rater_a - series.rater_b
    return [(float(mi), float(di)) for mi, di in zip(m, d)]

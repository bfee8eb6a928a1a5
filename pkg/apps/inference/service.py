"""
Per-regime robust covariances and break-date confidence intervals.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from django.db import models
from statsmodels.stats.sandwich_covariance import S_hac_simple, weights_bartlett

from apps.core.exceptions import InvalidParameter, NotEnoughBreaks, SegmentTooShort, ZeroShift
from apps.inference.distribution import argmax_cdf, argmax_quantile
from apps.segmentation.service import fit_segments
from apps.segmentation.types import BreakSet, TimeSeries

logger = logging.getLogger(__name__)

Bandwidth = Union[int, str]

ZERO_SHIFT_TOL = 1e-12
DEFAULT_LEVEL = 0.95


class IntervalStatus(models.TextChoices):
    OK = "ok", "Ok"
    ZERO_SHIFT = "zero_shift", "Zero shift"
    UNDEFINED = "undefined", "Undefined"
    EXACT = "exact", "Exact"


def resolve_bandwidth(bandwidth: Bandwidth, n_obs: int) -> int:
    """
    Bartlett truncation lag for a segment of ``n_obs`` observations.

    "auto" follows floor(4 (n/100)^(2/9)); every lag is capped at n - 1.
    """
    if bandwidth == "auto":
        lags = int(math.floor(4.0 * (n_obs / 100.0) ** (2.0 / 9.0)))
    elif isinstance(bandwidth, (int, np.integer)) and not isinstance(bandwidth, bool):
        if bandwidth < 0:
            raise InvalidParameter("Bandwidth must be non-negative", {"bandwidth": int(bandwidth)})
        lags = int(bandwidth)
    else:
        raise InvalidParameter(
            "Bandwidth must be a non-negative integer or 'auto'", {"bandwidth": str(bandwidth)}
        )
    return max(0, min(lags, n_obs - 1))


def long_run_covariance(scores: np.ndarray, lags: int) -> np.ndarray:
    """Bartlett-weighted long-run covariance (1/n) sum_j w_j Gamma_j of the score rows."""
    inner = S_hac_simple(scores, nlags=lags, weights_func=weights_bartlett)
    inner = np.atleast_2d(inner) / scores.shape[0]
    return (inner + inner.T) / 2.0


@dataclass(frozen=True, eq=False)
class SegmentEstimate:
    """
    Regime coefficients with their sandwich covariance.

    ``long_run_variance`` is the HAC estimate of Var(z_t u_t) (the error long-run variance for
    intercept-only fits) and ``regressor_moment`` is z'z / n.
    """

    start: int
    end: int
    coefficients: np.ndarray
    residuals: np.ndarray
    covariance: np.ndarray
    long_run_variance: np.ndarray
    regressor_moment: np.ndarray
    bandwidth: int

    @property
    def n_obs(self) -> int:
        return self.end - self.start + 1

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


@dataclass(frozen=True, eq=False)
class SegmentInference:
    series_id: str
    breaks: BreakSet
    segments: Tuple[SegmentEstimate, ...]


@dataclass(frozen=True)
class BreakInterval:
    """Confidence interval for one break date; bounds are None unless the status allows them."""

    break_index: int
    point_period: int
    lower_period: Optional[int]
    upper_period: Optional[int]
    level: float
    status: str = IntervalStatus.OK
    lower_index: Optional[int] = None
    upper_index: Optional[int] = None

    @property
    def width(self) -> Optional[int]:
        if self.lower_index is None or self.upper_index is None:
            return None
        return self.upper_index - self.lower_index


def robust_segment_covariance(
    series: TimeSeries, breaks: BreakSet, kernel_bandwidth: Bandwidth = "auto"
) -> SegmentInference:
    """
    Heteroskedasticity and autocorrelation consistent covariance of every regime's coefficients.

    Each regime gets its own Bartlett-kernel long-run variance, so error variances may differ
    across regimes. Bandwidth 0 gives the White (HC0) sandwich.

    Raises:
        SegmentTooShort: a regime has fewer than q + 1 observations.
    """
    q = series.q
    for start, end in breaks.bounds(series.t_len):
        if end - start + 1 < q + 1:
            raise SegmentTooShort(
                f"Regime [{start}, {end}] has fewer than q + 1 = {q + 1} observations",
                {"start": start, "end": end, "q": q},
            )

    fitted = fit_segments(series, breaks)
    design = series.design
    segments = []
    for fit in fitted.segment_fits:
        z = design[fit.start - 1 : fit.end]
        n_obs = fit.n_obs
        lags = resolve_bandwidth(kernel_bandwidth, n_obs)
        omega = long_run_covariance(z * fit.residuals[:, None], lags)
        cross = z.T @ z
        cross_inv = np.linalg.inv(cross)
        covariance = n_obs * cross_inv @ omega @ cross_inv
        segments.append(
            SegmentEstimate(
                start=fit.start,
                end=fit.end,
                coefficients=fit.coefficients,
                residuals=fit.residuals,
                covariance=(covariance + covariance.T) / 2.0,
                long_run_variance=omega,
                regressor_moment=cross / n_obs,
                bandwidth=lags,
            )
        )
    return SegmentInference(series.series_id, breaks, tuple(segments))


def _pooled_moments(
    series: TimeSeries, inference: SegmentInference, bandwidth: Bandwidth
) -> Tuple[np.ndarray, np.ndarray]:
    design = series.design
    residuals = np.concatenate([segment.residuals for segment in inference.segments])
    omega = long_run_covariance(
        design * residuals[:, None], resolve_bandwidth(bandwidth, series.t_len)
    )
    return design.T @ design / series.t_len, omega


def break_confidence_interval(
    series: TimeSeries,
    breaks: BreakSet,
    level: float = DEFAULT_LEVEL,
    het_regressors: bool = True,
    het_errors: bool = True,
    kernel_bandwidth: Bandwidth = "auto",
    strict: bool = False,
    inference: Optional[SegmentInference] = None,
) -> List[BreakInterval]:
    """
    Asymptotic confidence interval for every break date.

    Quantiles of the limiting argmax distribution are scaled by d'W1d / (d'Q1d)^2, where d is the
    coefficient shift across the break and W, Q are the long-run variance and regressor moment of
    the regime before it. With ``het_regressors``/``het_errors`` off the full-sample moments are
    used on both sides.

    Args:
        series (TimeSeries): The analysed series.
        breaks (BreakSet): Estimated break indices, m >= 1.
        level (float): Confidence level in (0, 1).
        het_regressors (bool): Allow regressor moments to differ across regimes.
        het_errors (bool): Allow error long-run variances to differ across regimes.
        kernel_bandwidth (int | str): Bartlett lag or "auto".
        strict (bool): Raise ZeroShift instead of reporting a ``zero_shift`` interval.
        inference (SegmentInference): Precomputed regime covariances to reuse.

    Returns:
        list[BreakInterval]: One interval per break, in break order.
    """
    if breaks.m == 0:
        raise NotEnoughBreaks("Break intervals need at least one break", {"m": 0})
    if not 0.0 < level < 1.0:
        raise InvalidParameter("Confidence level must lie in (0, 1)", {"level": level})

    if inference is None:
        inference = robust_segment_covariance(series, breaks, kernel_bandwidth)
    pooled_q, pooled_omega = None, None
    if not (het_regressors and het_errors):
        pooled_q, pooled_omega = _pooled_moments(series, inference, kernel_bandwidth)

    tail = (1.0 - level) / 2.0
    t_len = series.t_len
    intervals = []
    for position, index in enumerate(breaks.break_indices):
        before, after = inference.segments[position], inference.segments[position + 1]
        shift = after.coefficients - before.coefficients
        point = series.period_of(index)

        if np.max(np.abs(shift)) <= ZERO_SHIFT_TOL:
            if strict:
                raise ZeroShift(
                    f"Regimes around break {index} have equal coefficients",
                    {"break_index": index},
                )
            logger.warning("Zero coefficient shift at break %s of %s", index, series.series_id)
            intervals.append(
                BreakInterval(index, point, None, None, level, IntervalStatus.ZERO_SHIFT)
            )
            continue

        q_before = before.regressor_moment if het_regressors else pooled_q
        q_after = after.regressor_moment if het_regressors else pooled_q
        omega_before = before.long_run_variance if het_errors else pooled_omega
        omega_after = after.long_run_variance if het_errors else pooled_omega

        q_prod_before = float(shift @ q_before @ shift)
        q_prod_after = float(shift @ q_after @ shift)
        o_prod_before = float(shift @ omega_before @ shift)
        o_prod_after = float(shift @ omega_after @ shift)

        if o_prod_before <= 0.0 and o_prod_after <= 0.0:
            intervals.append(
                BreakInterval(index, point, point, point, level, IntervalStatus.EXACT, index, index)
            )
            continue

        variance_floor = 1e-12 * max(o_prod_before, o_prod_after)
        xi = q_prod_after / q_prod_before
        phi = max(o_prod_after, variance_floor) / max(o_prod_before, variance_floor)
        scale = max(o_prod_before, variance_floor) / q_prod_before**2

        center = argmax_cdf(0.0, xi, phi)
        if not tail < center < 1.0 - tail:
            logger.warning(
                "Interval for break %s of %s undefined: P(argmax <= 0) = %.4f",
                index,
                series.series_id,
                center,
            )
            intervals.append(
                BreakInterval(index, point, None, None, level, IntervalStatus.UNDEFINED)
            )
            continue

        upper_quantile = argmax_quantile(1.0 - tail, xi, phi)
        lower_quantile = argmax_quantile(tail, xi, phi)
        lower_index = max(1, int(math.floor(index - upper_quantile * scale)))
        upper_index = min(t_len, int(math.ceil(index - lower_quantile * scale)))
        intervals.append(
            BreakInterval(
                break_index=index,
                point_period=point,
                lower_period=series.period_of(lower_index),
                upper_period=series.period_of(upper_index),
                level=level,
                status=IntervalStatus.OK,
                lower_index=lower_index,
                upper_index=upper_index,
            )
        )
    return intervals

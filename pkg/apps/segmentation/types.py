"""
Domain types for least-squares segmentation.

Index conventions follow the segmented regression model: observations are numbered 1..T, a
break index T_j is the LAST observation of regime j, and T_0 = 0, T_{m+1} = T.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from apps.core.exceptions import InvalidBreakSet, InvalidSeries


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Ordered, gap-free (period, value) observations for one named series.

    When ``regressors`` is omitted the model is intercept-only (q = 1, z_t = 1).
    """

    series_id: str
    periods: np.ndarray
    values: np.ndarray
    regressors: Optional[np.ndarray] = None

    def __post_init__(self):
        periods = np.asarray(self.periods, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if periods.ndim != 1 or values.ndim != 1 or periods.size != values.size:
            raise InvalidSeries(
                f"Series {self.series_id!r}: periods and values must be 1-D of equal length",
                {"periods": int(periods.size), "values": int(values.size)},
            )
        if periods.size and np.any(np.diff(periods) != 1):
            raise InvalidSeries(
                f"Series {self.series_id!r}: periods must increase by exactly one (no gaps)",
                {"series_id": self.series_id},
            )
        if not np.all(np.isfinite(values)):
            raise InvalidSeries(
                f"Series {self.series_id!r}: values must be finite",
                {"series_id": self.series_id},
            )
        regressors = self.regressors
        if regressors is not None:
            regressors = np.asarray(regressors, dtype=np.float64)
            if regressors.ndim == 1:
                regressors = regressors[:, None]
            if regressors.ndim != 2 or regressors.shape[0] != values.size:
                raise InvalidSeries(
                    f"Series {self.series_id!r}: regressor rows must match the observations",
                    {"shape": list(regressors.shape)},
                )
            if regressors.shape[1] < 1 or not np.all(np.isfinite(regressors)):
                raise InvalidSeries(
                    f"Series {self.series_id!r}: regressors must be finite with q >= 1",
                    {"series_id": self.series_id},
                )
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "regressors", regressors)

    @classmethod
    def from_values(cls, values: Sequence[float], series_id: str = "series", start: int = 1):
        """Build an intercept-only series with consecutive periods starting at ``start``."""
        values = np.asarray(values, dtype=np.float64)
        return cls(series_id, np.arange(start, start + values.size), values)

    @property
    def t_len(self) -> int:
        return int(self.values.size)

    @property
    def q(self) -> int:
        return 1 if self.regressors is None else int(self.regressors.shape[1])

    @property
    def is_intercept_only(self) -> bool:
        return self.regressors is None

    @property
    def design(self) -> np.ndarray:
        """Regressor matrix z (T x q); a column of ones for intercept-only series."""
        if self.regressors is None:
            return np.ones((self.t_len, 1))
        return self.regressors

    def period_of(self, index: int) -> int:
        """Calendar period of 1-based observation ``index``."""
        return int(self.periods[index - 1])

    def with_values(self, values: Sequence[float]) -> "TimeSeries":
        """Same periods and regressors, new dependent values."""
        return TimeSeries(self.series_id, self.periods, np.asarray(values), self.regressors)


@dataclass(frozen=True, eq=False)
class SsrTriangle:
    """
    Minimal residual sums of squares for every admissible segment [i..j].

    ``cells`` is a T x T array indexed 0-based; cells for segments shorter than ``min_len``
    (and the lower triangle) hold +inf.
    """

    t_len: int
    min_len: int
    cells: np.ndarray

    def ssr(self, i: int, j: int) -> float:
        """SSR of the segment running from observation i to j (1-based, inclusive)."""
        if not self.is_admissible(i, j):
            raise InvalidBreakSet(
                f"Segment [{i}, {j}] is not admissible for T={self.t_len}, min_len={self.min_len}",
                {"start": i, "end": j},
            )
        return float(self.cells[i - 1, j - 1])

    def is_admissible(self, i: int, j: int) -> bool:
        return 1 <= i <= j <= self.t_len and j - i + 1 >= self.min_len

    @property
    def full_sample_ssr(self) -> float:
        return float(self.cells[0, self.t_len - 1])


@dataclass(frozen=True)
class BreakSet:
    """Sorted break indices (T_1, ..., T_m), each the last observation of its regime."""

    break_indices: Tuple[int, ...] = ()

    def __post_init__(self):
        indices = tuple(int(index) for index in self.break_indices)
        if any(later <= earlier for earlier, later in zip(indices, indices[1:])):
            raise InvalidBreakSet(
                "Break indices must be strictly increasing", {"breaks": list(indices)}
            )
        object.__setattr__(self, "break_indices", indices)

    @property
    def m(self) -> int:
        return len(self.break_indices)

    def bounds(self, t_len: int) -> Tuple[Tuple[int, int], ...]:
        """1-based inclusive (start, end) bounds of the m + 1 regimes."""
        edges = (0,) + self.break_indices + (t_len,)
        return tuple((edges[k] + 1, edges[k + 1]) for k in range(len(edges) - 1))

    def is_admissible(self, t_len: int, min_len: int) -> bool:
        if any(index < min_len or index > t_len - min_len for index in self.break_indices):
            return False
        return all(end - start + 1 >= min_len for start, end in self.bounds(t_len))

    def validate(self, t_len: int, min_len: int) -> "BreakSet":
        if not self.is_admissible(t_len, min_len):
            raise InvalidBreakSet(
                f"Breaks {list(self.break_indices)} violate min_len={min_len} for T={t_len}",
                {"breaks": list(self.break_indices), "t_len": t_len, "min_len": min_len},
            )
        return self


@dataclass(frozen=True, eq=False)
class SegmentFit:
    """OLS fit of one regime: coefficients delta_j, residuals u_t and their SSR."""

    start: int
    end: int
    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float

    @property
    def n_obs(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    """Optimal break set, total SSR and (once fitted) the per-regime fits."""

    series_id: str
    t_len: int
    min_len: int
    breaks: BreakSet
    total_ssr: float
    segment_fits: Tuple[SegmentFit, ...] = field(default_factory=tuple)

    @property
    def m(self) -> int:
        return self.breaks.m

    def fitted_values(self, series: TimeSeries) -> np.ndarray:
        """Piecewise fitted values z_t' delta_j across all regimes."""
        design = series.design
        fitted = np.empty(series.t_len)
        for fit in self.segment_fits:
            rows = slice(fit.start - 1, fit.end)
            fitted[rows] = design[rows] @ fit.coefficients
        return fitted

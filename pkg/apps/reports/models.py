"""
Report models
"""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple, Union

from django.db import models

YearRange = Tuple[int, int]


class SkipReason(models.TextChoices):
    """
    Skipped series reason choices
    """

    NOT_FOUND = "series_not_found", "Series not found"
    FAILED = "analysis_failed", "Analysis failed"


@dataclass(frozen=True)
class AnalysisConfig:
    """
    Options of one ``breaks`` run after merging flags, the config file and settings.
    """

    inputs: Tuple[str, ...]
    series: Tuple[str, ...] = ()
    min_len: int = 4
    max_m: int = 8
    level: float = 0.95
    bandwidth: Union[int, str] = "auto"
    het_regressors: bool = True
    het_errors: bool = True
    window: Optional[YearRange] = None
    windows: Mapping[str, YearRange] = field(default_factory=dict)
    out_dir: Optional[str] = None

    def window_for(self, series_id: str, key: str) -> Optional[YearRange]:
        """Per-series window (by id, then key) falling back to the global one."""
        return self.windows.get(series_id) or self.windows.get(key) or self.window


@dataclass(frozen=True)
class BicRow:
    m: int
    total_ssr: Optional[float]
    bic: Optional[float]
    feasible: bool
    degenerate: bool
    break_years: Optional[Tuple[int, ...]]


@dataclass(frozen=True)
class BreakRow:
    break_index: int
    year: int
    lower_year: Optional[int]
    upper_year: Optional[int]
    level: float
    status: str


@dataclass(frozen=True)
class SegmentRow:
    start_year: int
    end_year: int
    n_obs: int
    coefficients: Tuple[float, ...]
    standard_errors: Tuple[float, ...]
    ssr: float


@dataclass(frozen=True)
class PlotPoint:
    year: int
    observed: float
    fitted: float


@dataclass(frozen=True)
class BreakReport:
    """
    Everything reported for one series: the BIC table, the chosen breaks with their intervals,
    the regime estimates and the observed-versus-fitted plot data.
    """

    series_id: str
    key: str
    unit: Optional[str]
    t_len: int
    q: int
    min_len: int
    max_m: int
    level: float
    window: Optional[YearRange]
    chosen_m: int
    break_indices: Tuple[int, ...]
    break_years: Tuple[int, ...]
    bic_table: Tuple[BicRow, ...]
    intervals: Tuple[BreakRow, ...]
    segments: Tuple[SegmentRow, ...]
    plot: Tuple[PlotPoint, ...]


@dataclass(frozen=True)
class SkippedSeries:
    series_id: str
    code: str
    message: str


@dataclass(frozen=True)
class BreaksRun:
    reports: Tuple[BreakReport, ...]
    skipped: Tuple[SkippedSeries, ...]

    @property
    def exit_code(self) -> int:
        if not self.skipped:
            return 0
        return 3 if self.reports else 2

"""
Break-count selection by the Bayesian information criterion.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.core.exceptions import DegenerateFit, InvalidParameter
from apps.segmentation.service import BreakSearch, compute_ssr_triangle, fit_segments
from apps.segmentation.types import BreakSet, SegmentationResult, TimeSeries

logger = logging.getLogger(__name__)

DEFAULT_MAX_M = 8
DEFAULT_MIN_LEN = 4


def parameter_count(m: int, q: int) -> int:
    """Segment coefficients, break dates and one error variance: (m+1)q + m + 1."""
    return (m + 1) * q + m + 1


def bic(total_ssr: float, t_len: int, m: int, q: int, strict: bool = False) -> float:
    """
    Gaussian-likelihood BIC of an m-break fit.

    Args:
        total_ssr (float): Minimal total SSR of the m-break partition.
        t_len (int): Sample size T.
        m (int): Number of breaks.
        q (int): Regressor dimension.
        strict (bool): Raise DegenerateFit on a perfect fit instead of scoring it.

    Returns:
        float: T(ln(2 pi SSR / T) + 1) + p_m ln T, or -inf when SSR <= 0.
    """
    n_params = parameter_count(m, q)
    if t_len <= n_params:
        raise InvalidParameter(
            f"BIC needs T > p_m (T={t_len}, p_m={n_params})",
            {"t_len": t_len, "m": m, "q": q, "p_m": n_params},
        )
    if total_ssr <= 0.0:
        if strict:
            raise DegenerateFit(
                f"Perfect fit with m={m} breaks leaves no residual variance",
                {"m": m, "total_ssr": total_ssr},
            )
        return -math.inf
    return t_len * (math.log(2.0 * math.pi * total_ssr / t_len) + 1.0) + n_params * math.log(t_len)


@dataclass(frozen=True)
class SelectionRow:
    """One candidate break count; ``feasible`` is False when m cannot be fitted or scored."""

    m: int
    total_ssr: Optional[float]
    bic: Optional[float]
    feasible: bool
    degenerate: bool = False
    breaks: Optional[BreakSet] = None


@dataclass(frozen=True)
class SelectionTable:
    rows: Tuple[SelectionRow, ...]
    chosen_m: int

    @property
    def max_m(self) -> int:
        return len(self.rows) - 1

    def row(self, m: int) -> SelectionRow:
        return self.rows[m]


def choose_m(rows: Tuple[SelectionRow, ...]) -> int:
    """Smallest m among the feasible rows attaining the minimal BIC."""
    feasible = [row for row in rows if row.feasible]
    if not feasible:
        raise InvalidParameter("No feasible break count to select from", {"rows": len(rows)})
    scores = np.array([row.bic for row in feasible], dtype=float)
    return feasible[int(np.argmin(scores))].m


def select_breaks(
    series: TimeSeries,
    max_m: int = DEFAULT_MAX_M,
    min_len: int = DEFAULT_MIN_LEN,
) -> Tuple[SelectionTable, SegmentationResult]:
    """
    Build the BIC table over m = 0..max_m and fit the segmentation at the chosen m.

    The SSR triangle is computed once; a single tail-cost search serves every m.
    """
    if max_m < 0:
        raise InvalidParameter("max_m must be non-negative", {"max_m": max_m})

    tri = compute_ssr_triangle(series, min_len)
    search = BreakSearch(tri, min_len, max_m)
    t_len, q = series.t_len, series.q

    rows = []
    for m in range(max_m + 1):
        if not search.is_feasible(m):
            rows.append(SelectionRow(m=m, total_ssr=None, bic=None, feasible=False))
            continue
        result = search.best(m, series.series_id)
        if t_len <= parameter_count(m, q):
            rows.append(
                SelectionRow(
                    m=m,
                    total_ssr=result.total_ssr,
                    bic=None,
                    feasible=False,
                    breaks=result.breaks,
                )
            )
            continue
        degenerate = result.total_ssr <= 0.0
        if degenerate:
            logger.warning("Zero residual SSR for %s at m=%s", series.series_id, m)
        rows.append(
            SelectionRow(
                m=m,
                total_ssr=result.total_ssr,
                bic=bic(result.total_ssr, t_len, m, q),
                feasible=True,
                degenerate=degenerate,
                breaks=result.breaks,
            )
        )

    rows = tuple(rows)
    chosen_m = choose_m(rows)
    table = SelectionTable(rows=rows, chosen_m=chosen_m)
    chosen = fit_segments(series, rows[chosen_m].breaks, min_len=min_len)
    logger.info(
        "Selected m=%s for %s (breaks %s)",
        chosen_m,
        series.series_id,
        list(chosen.breaks.break_indices),
    )
    return table, chosen

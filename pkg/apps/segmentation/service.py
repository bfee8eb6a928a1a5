"""
Exact global least-squares segmentation with unknown break dates.

The SSR of every admissible segment is precomputed once (``compute_ssr_triangle``) and a dynamic
program over tail costs finds the optimal partition for any break count. A brute-force
enumerator is kept as an oracle for small instances.
"""

import itertools
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from apps.core.exceptions import (
    InfeasibleBreakCount,
    InvalidParameter,
    NegativeSsr,
    OracleTooLarge,
    SeriesTooShort,
    SingularSegment,
)
from apps.segmentation.types import (
    BreakSet,
    SegmentationResult,
    SegmentFit,
    SsrTriangle,
    TimeSeries,
)

logger = logging.getLogger(__name__)

# Relative to the full-sample SSR; partitions closer than this to the optimum count as ties.
TIE_RTOL = 1e-10
NEGATIVE_SSR_TOL = 1e-9
ORACLE_MAX_T = 30
ORACLE_MAX_M = 4


def compute_ssr_triangle(series: TimeSeries, min_len: int) -> SsrTriangle:
    """
    Build the SSR triangle for every segment [i..j] with j - i + 1 >= min_len.

    All segments sharing a length are extended by one observation together; each extension is a
    rank-one recursive least-squares update of (delta, (z'z)^-1, SSR), O(q^2) per segment. For
    intercept-only series this reduces to Welford's running mean/SSR recursion.

    Raises:
        InvalidParameter: min_len < q or min_len > T.
        SeriesTooShort: T < 2 * min_len.
        SingularSegment: an admissible segment has a rank-deficient z'z.
    """
    t_len, q = series.t_len, series.q
    if min_len < max(q, 1) or min_len > t_len:
        raise InvalidParameter(
            f"min_len={min_len} must satisfy q={q} <= min_len <= T={t_len}",
            {"min_len": min_len, "q": q, "t_len": t_len},
        )
    if t_len < 2 * min_len:
        raise SeriesTooShort(
            f"Series {series.series_id!r} has T={t_len} < 2*min_len={2 * min_len}",
            {"series_id": series.series_id, "t_len": t_len, "min_len": min_len},
        )

    if series.is_intercept_only:
        cells = _intercept_triangle(series.values)
    else:
        cells = _regression_triangle(series.design, series.values, min_len)

    idx = np.arange(t_len)
    lengths = idx[None, :] - idx[:, None] + 1
    cells[lengths < min_len] = np.inf
    cells = _clamp_ssr(cells)
    logger.debug("Built SSR triangle for %s (T=%s, min_len=%s)", series.series_id, t_len, min_len)
    return SsrTriangle(t_len=t_len, min_len=min_len, cells=cells)


def _intercept_triangle(y: np.ndarray) -> np.ndarray:
    t_len = y.size
    cells = np.full((t_len, t_len), np.inf)
    np.fill_diagonal(cells, 0.0)
    mean = y.copy()
    ssr = np.zeros(t_len)
    for d in range(1, t_len):
        count = t_len - d
        rows = np.arange(count)
        obs = y[d:]
        prev = mean[:count].copy()
        n_obs = d + 1
        updated = prev + (obs - prev) / n_obs
        ssr[:count] += (obs - prev) * (obs - updated)
        mean[:count] = updated
        cells[rows, rows + d] = ssr[:count]
    return cells


def _regression_triangle(z: np.ndarray, y: np.ndarray, min_len: int) -> np.ndarray:
    t_len, q = z.shape
    # Segment SSRs depend only on the column space of z.
    basis, upper = np.linalg.qr(z)
    if np.linalg.matrix_rank(upper) == q:
        z = basis
    cells = np.full((t_len, t_len), np.inf)
    n_starts = t_len - q + 1

    # Exactly identified fits on the first q observations of every start.
    blocks = np.stack([z[i : i + q] for i in range(n_starts)])
    targets = np.stack([y[i : i + q] for i in range(n_starts)])
    cross = np.einsum("sti,stj->sij", blocks, blocks)
    regular = np.linalg.matrix_rank(cross) == q

    inverse = np.zeros_like(cross)
    beta = np.zeros((n_starts, q))
    ssr = np.zeros(n_starts)
    if np.any(regular):
        inverse[regular] = np.linalg.inv(cross[regular])
        beta[regular] = np.linalg.solve(blocks[regular], targets[regular][..., None])[..., 0]
    starts = np.arange(n_starts)
    cells[starts, starts + q - 1] = 0.0

    for d in range(q, t_len):
        count = t_len - d
        rows = np.arange(count)
        x_new = z[d:]
        y_new = y[d:]
        p_mat = inverse[:count]
        px = np.einsum("sij,sj->si", p_mat, x_new)
        gain = 1.0 + np.einsum("si,si->s", x_new, px)
        error = y_new - np.einsum("si,si->s", x_new, beta[:count])
        beta[:count] += px * (error / gain)[:, None]
        inverse[:count] = p_mat - np.einsum("si,sj->sij", px, px) / gain[:, None, None]
        ssr[:count] += error**2 / gain
        cells[rows, rows + d] = ssr[:count]

    # Starts whose first q rows are collinear fall back to direct fits.
    for start in np.flatnonzero(~regular):
        for end in range(start + min_len - 1, t_len):
            _, _, segment_ssr = _ols(z[start : end + 1], y[start : end + 1], start + 1, end + 1)
            cells[start, end] = segment_ssr
    return cells


def _clamp_ssr(cells: np.ndarray) -> np.ndarray:
    finite = np.isfinite(cells)
    if np.any(cells[finite] < -NEGATIVE_SSR_TOL):
        worst = float(cells[finite].min())
        raise NegativeSsr(f"SSR accumulation produced {worst:.3e}", {"min_ssr": worst})
    cells[finite & (cells < 0.0)] = 0.0
    return cells


def _ols(
    z: np.ndarray, y: np.ndarray, start: int, end: int, intercept_only: bool = False
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Direct OLS of y on z for the 1-based segment [start, end]."""
    if intercept_only:
        coefficients = np.array([y.mean()])
        residuals = y - coefficients[0]
        return coefficients, residuals, float(residuals @ residuals)
    if np.linalg.matrix_rank(z) < z.shape[1]:
        raise SingularSegment(
            f"Regressor cross-product is rank-deficient on segment [{start}, {end}]",
            {"start": start, "end": end},
        )
    coefficients, *_ = np.linalg.lstsq(z, y, rcond=None)
    residuals = y - z @ coefficients
    return coefficients, residuals, float(residuals @ residuals)


def _tie_tolerance(reference_ssr: float) -> float:
    return TIE_RTOL * reference_ssr if np.isfinite(reference_ssr) else 0.0


class BreakSearch:
    """
    Dynamic program over tail costs, shared across break counts.

    ``tails[k][s]`` is the minimal SSR of splitting observations s+1..T (0-based start s) into
    k + 1 admissible segments. Tables depend on k only, so one search answers every m <= max_m.
    """

    def __init__(self, tri: SsrTriangle, min_len: int, max_m: int):
        if min_len < tri.min_len:
            raise InvalidParameter(
                f"min_len={min_len} is below the triangle's build length {tri.min_len}",
                {"min_len": min_len, "triangle_min_len": tri.min_len},
            )
        if max_m < 0:
            raise InvalidParameter("Break count must be non-negative", {"m": max_m})
        self.tri = tri
        self.min_len = min_len
        self.max_m = min(max_m, tri.t_len // min_len - 1)
        self.tolerance = _tie_tolerance(tri.full_sample_ssr)

        cells = tri.cells.copy()
        idx = np.arange(tri.t_len)
        cells[(idx[None, :] - idx[:, None] + 1) < min_len] = np.inf
        self.cells = cells

        self.tails: List[np.ndarray] = [cells[:, tri.t_len - 1].copy()]
        for _ in range(1, self.max_m + 1):
            previous = self.tails[-1]
            self.tails.append(np.min(cells[:, :-1] + previous[None, 1:], axis=1))

    def is_feasible(self, m: int) -> bool:
        return 0 <= m and (m + 1) * self.min_len <= self.tri.t_len

    def best(self, m: int, series_id: str = "series") -> SegmentationResult:
        """Optimal m-break partition; ties resolve to the lexicographically smallest vector."""
        if not self.is_feasible(m):
            raise InfeasibleBreakCount(
                f"m={m} breaks need (m+1)*min_len={(m + 1) * self.min_len} > T={self.tri.t_len}",
                {"m": m, "min_len": self.min_len, "t_len": self.tri.t_len},
            )
        if m > self.max_m:
            raise InvalidParameter(
                f"m={m} exceeds the search depth {self.max_m}", {"m": m, "max_m": self.max_m}
            )

        # Walk forward taking the earliest break that still completes within the tie budget.
        budget = self.tails[m][0] + self.tolerance
        position = 0
        breaks: List[int] = []
        total = 0.0
        for k in range(m, 0, -1):
            candidates = total + self.cells[position, :-1] + self.tails[k - 1][1:]
            within = np.flatnonzero(candidates <= budget)
            end = int(within[0]) if within.size else int(np.argmin(candidates))
            total += float(self.cells[position, end])
            breaks.append(end + 1)
            position = end + 1
        total += float(self.cells[position, self.tri.t_len - 1])

        break_set = BreakSet(tuple(breaks)).validate(self.tri.t_len, self.min_len)
        return SegmentationResult(
            series_id=series_id,
            t_len=self.tri.t_len,
            min_len=self.min_len,
            breaks=break_set,
            total_ssr=total,
        )


def optimal_breaks(tri: SsrTriangle, m: int, min_len: int) -> SegmentationResult:
    """
    Break set minimizing total SSR over all partitions into m + 1 segments of length >= min_len.

    Only ``breaks`` and ``total_ssr`` are filled; ``fit_segments`` adds the regime fits.
    """
    if m < 0:
        raise InvalidParameter("Break count must be non-negative", {"m": m})
    if (m + 1) * min_len > tri.t_len:
        raise InfeasibleBreakCount(
            f"m={m} breaks need (m+1)*min_len={(m + 1) * min_len} > T={tri.t_len}",
            {"m": m, "min_len": min_len, "t_len": tri.t_len},
        )
    return BreakSearch(tri, min_len, m).best(m)


def brute_force_optimal_breaks(series: TimeSeries, m: int, min_len: int) -> SegmentationResult:
    """
    Enumerate every admissible break vector and fit each regime directly (test oracle).

    Guarded to T <= 30 and m <= 4.
    """
    t_len = series.t_len
    if t_len > ORACLE_MAX_T or m > ORACLE_MAX_M:
        raise OracleTooLarge(
            f"Oracle limited to T <= {ORACLE_MAX_T} and m <= {ORACLE_MAX_M}",
            {"t_len": t_len, "m": m},
        )
    if m < 0 or min_len < series.q:
        raise InvalidParameter(
            "Oracle needs m >= 0 and min_len >= q", {"m": m, "min_len": min_len, "q": series.q}
        )
    if (m + 1) * min_len > t_len:
        raise InfeasibleBreakCount(
            f"m={m} breaks need (m+1)*min_len={(m + 1) * min_len} > T={t_len}",
            {"m": m, "min_len": min_len, "t_len": t_len},
        )

    design, values = series.design, series.values
    segment_cache: Dict[Tuple[int, int], float] = {}

    def segment_ssr(start: int, end: int) -> float:
        if (start, end) not in segment_cache:
            _, _, ssr = _ols(
                design[start - 1 : end],
                values[start - 1 : end],
                start,
                end,
                intercept_only=series.is_intercept_only,
            )
            segment_cache[(start, end)] = ssr
        return segment_cache[(start, end)]

    scored: List[Tuple[Tuple[int, ...], float]] = []
    for candidate in itertools.combinations(range(min_len, t_len - min_len + 1), m):
        break_set = BreakSet(candidate)
        if not break_set.is_admissible(t_len, min_len):
            continue
        total = sum(segment_ssr(start, end) for start, end in break_set.bounds(t_len))
        scored.append((candidate, total))

    best_total = min(total for _, total in scored)
    tolerance = _tie_tolerance(segment_ssr(1, t_len))
    chosen = next(candidate for candidate, total in scored if total <= best_total + tolerance)
    return fit_segments(series, BreakSet(chosen), min_len=min_len)


def fit_segments(
    series: TimeSeries, breaks: BreakSet, min_len: Optional[int] = None
) -> SegmentationResult:
    """
    Per-regime OLS coefficients and residuals for a given break set.

    Intercept-only regimes are fitted by their sample mean exactly.
    """
    t_len = series.t_len
    required = max(series.q, min_len or series.q)
    breaks.validate(t_len, required)

    design, values = series.design, series.values
    fits = []
    for start, end in breaks.bounds(t_len):
        coefficients, residuals, ssr = _ols(
            design[start - 1 : end],
            values[start - 1 : end],
            start,
            end,
            intercept_only=series.is_intercept_only,
        )
        fits.append(SegmentFit(start, end, coefficients, residuals, ssr))

    return SegmentationResult(
        series_id=series.series_id,
        t_len=t_len,
        min_len=required,
        breaks=breaks,
        total_ssr=float(sum(fit.ssr for fit in fits)),
        segment_fits=tuple(fits),
    )

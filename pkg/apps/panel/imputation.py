"""
Splicing, ratio imputation, interpolation and directional allocation of year-indexed series.

Series are pandas Series indexed by integer year; missing cells are either absent or NaN.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from apps.core.exceptions import (
    ExtrapolationRequired,
    NoAnchor,
    NonPositiveInput,
    NoOverlap,
    ReferenceGap,
    ZeroDenominator,
    ZeroReference,
)

logger = logging.getLogger(__name__)

DISCONTINUITY_LIMIT = 0.05

OverlapYear = Union[int, Tuple[int, int], Sequence[int]]


def _observed(series: pd.Series) -> pd.Series:
    return series.dropna().sort_index()


def _has(series: pd.Series, year: int) -> bool:
    return year in series.index and not pd.isna(series.loc[year])


@dataclass(frozen=True)
class OverlapCalibration:
    """
    Conversion factor mapping source ``b`` onto source ``a``.

    ``max_discontinuity`` is the largest relative gap |a - factor * b| / |a| over the overlap.
    """

    factor: float
    pairs: Tuple[Tuple[int, int], ...]
    ratios: Tuple[float, ...]
    adjacent: bool
    max_discontinuity: float

    @property
    def flagged(self) -> bool:
        return self.max_discontinuity > DISCONTINUITY_LIMIT + 1e-12


def calibrate_overlap(
    series_a: pd.Series, series_b: pd.Series, overlap_years: Optional[Iterable[OverlapYear]] = None
) -> OverlapCalibration:
    """
    Constant conversion factor a / b averaged over the overlap.

    Args:
        series_a (pd.Series): Target scale, indexed by year.
        series_b (pd.Series): Source to be rescaled, indexed by year.
        overlap_years: Years observed in both, or (year_in_a, year_in_b) pairs for sources that
            only meet in adjacent years. Defaults to every common year.

    Returns:
        OverlapCalibration: factor and splice diagnostics.
    """
    observed_a, observed_b = _observed(series_a), _observed(series_b)
    if overlap_years is None:
        pairs = [(year, year) for year in observed_a.index.intersection(observed_b.index)]
    else:
        pairs = []
        for item in overlap_years:
            if isinstance(item, (list, tuple)):
                pairs.append((int(item[0]), int(item[1])))
            else:
                pairs.append((int(item), int(item)))

    missing = [
        pair for pair in pairs if not (_has(observed_a, pair[0]) and _has(observed_b, pair[1]))
    ]
    if not pairs or missing:
        raise NoOverlap(
            "Sources share no observed overlap years",
            {"overlap": [list(pair) for pair in pairs], "missing": [list(p) for p in missing]},
        )

    numerators = np.array([observed_a.loc[year_a] for year_a, _ in pairs], dtype=float)
    denominators = np.array([observed_b.loc[year_b] for _, year_b in pairs], dtype=float)
    if np.any(denominators == 0):
        raise ZeroDenominator(
            "Overlap value of the spliced source is zero",
            {"years": [pair[1] for pair, value in zip(pairs, denominators) if value == 0]},
        )

    ratios = numerators / denominators
    factor = float(ratios.mean())
    with np.errstate(divide="ignore", invalid="ignore"):
        gaps = np.abs(numerators - factor * denominators) / np.abs(numerators)
    gaps = np.where(np.isfinite(gaps), gaps, 0.0)
    return OverlapCalibration(
        factor=factor,
        pairs=tuple(pairs),
        ratios=tuple(float(ratio) for ratio in ratios),
        adjacent=any(year_a != year_b for year_a, year_b in pairs),
        max_discontinuity=float(gaps.max()),
    )


@dataclass(frozen=True)
class Imputation:
    series: pd.Series
    filled_years: Tuple[int, ...]
    ratio: Optional[float] = None


def fixed_ratio_impute(
    target: pd.Series,
    reference: pd.Series,
    anchor_years: Sequence[int],
    years: Optional[Tuple[int, int]] = None,
) -> Imputation:
    """
    Fill missing target years as r * reference, r being target / reference averaged over anchors.

    Observed target cells are never overwritten. Without ``years`` every reference year is a
    candidate for filling.
    """
    if not anchor_years:
        raise NoAnchor("Ratio imputation needs at least one anchor year", {})
    observed_target, observed_reference = _observed(target), _observed(reference)
    unanchored = [year for year in anchor_years if not _has(observed_target, year)]
    if unanchored:
        raise NoAnchor("Target is not observed on every anchor year", {"years": unanchored})
    reference_missing = [year for year in anchor_years if not _has(observed_reference, year)]
    if reference_missing:
        raise ReferenceGap(
            "Reference is not observed on every anchor year", {"years": reference_missing}
        )
    anchors = np.array([observed_reference.loc[year] for year in anchor_years], dtype=float)
    if np.any(anchors == 0):
        raise ZeroDenominator(
            "Reference is zero on an anchor year", {"anchors": list(anchor_years)}
        )
    ratio = float(np.mean([observed_target.loc[year] for year in anchor_years] / anchors))

    if years is None:
        candidates = list(observed_reference.index)
    else:
        candidates = list(range(int(years[0]), int(years[1]) + 1))
    to_fill = [year for year in candidates if not _has(observed_target, year)]
    gaps = [year for year in to_fill if not _has(observed_reference, year)]
    if gaps:
        raise ReferenceGap("Reference is missing on years to be filled", {"years": gaps})

    filled = observed_target.copy()
    for year in to_fill:
        filled.loc[year] = ratio * observed_reference.loc[year]
    return Imputation(filled.sort_index(), tuple(to_fill), ratio)


def interpolate_linear(series: pd.Series) -> Imputation:
    """
    Straight-line fill of interior gaps over consecutive integer years.

    Observed points are kept exactly. A missing first or last year would need extrapolation.
    """
    if series.empty:
        return Imputation(series.copy(), ())
    ordered = series.sort_index()
    first, last = int(ordered.index.min()), int(ordered.index.max())
    full = ordered.reindex(range(first, last + 1))
    if pd.isna(full.iloc[0]) or pd.isna(full.iloc[-1]):
        raise ExtrapolationRequired(
            "Gap touches the end of the series", {"first": first, "last": last}
        )
    missing = full.index[full.isna()]
    if missing.empty:
        return Imputation(full.astype(float), ())
    filled = full.astype(float).interpolate(method="index", limit_area="inside")
    return Imputation(filled.astype(float), tuple(int(year) for year in missing))


def allocate_directional(total: float, eastbound: float, westbound: float) -> Tuple[float, float]:
    """
    Split a two-way total by the eastbound/westbound ratio of a reference period.

    The westbound share is the remainder, so both parts always sum to ``total``.
    """
    if not (eastbound > 0 and westbound > 0):
        raise ZeroReference(
            "Reference directional values must be positive",
            {"eastbound": eastbound, "westbound": westbound},
        )
    if total < 0:
        raise NonPositiveInput("Total to allocate cannot be negative", {"total": total})
    east = total * eastbound / (eastbound + westbound)
    return east, total - east


def closest_reference_year(candidates: Iterable[int], year: int) -> Optional[int]:
    """Closest candidate year; ties go to the later year."""
    best: Optional[int] = None
    for candidate in candidates:
        if best is None or (abs(candidate - year), -candidate) < (abs(best - year), -best):
            best = int(candidate)
    return best


def common_years(*series: pd.Series) -> List[int]:
    years = None
    for item in series:
        observed = set(int(year) for year in _observed(item).index)
        years = observed if years is None else years & observed
    return sorted(years or [])

"""
Panel models
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import pandas as pd
from django.db import models

from apps.core.exceptions import MissingCpiYear, SourceSchemaError

CPI_BASE_YEAR = 1995

ROUTE_KEYS = (
    "transatlantic_westbound",
    "transatlantic_eastbound",
    "transpacific_westbound",
    "transpacific_eastbound",
    "asia_europe",
    "europe_asia",
)
INDUSTRY_KEYS = ("newbuilding", "secondhand", "scrap")


class Unit(models.TextChoices):
    """
    Source and panel unit choices
    """

    USD_PER_100TON_MILE = "usd_per_100ton_mile", "USD per 100 ton-mile"
    USD_PER_FEU = "usd_per_feu", "USD per FEU"
    USD_PER_TEU = "usd_per_teu", "USD per TEU"
    INDEX_1995_100 = "index_1995_100", "Index (1995 = 100)"
    TEU_CAPACITY = "teu_capacity", "TEU capacity"
    THOUSAND_TEU = "thousand_teu", "Thousand TEU"
    MILLION_TON = "million_ton", "Million tons"
    USD_PER_DWT_VESSEL = "usd_per_dwt_vessel", "USD per vessel (DWT class)"
    USD_PER_LTD = "usd_per_ltd", "USD per LTD"
    USD_1995_PER_TEU = "usd_1995_per_teu", "USD (1995) per TEU"
    MILLION_TEU = "million_teu", "Million TEU"


CANONICAL_UNITS = (Unit.USD_1995_PER_TEU, Unit.MILLION_TEU)
PRICE_UNITS = (Unit.USD_1995_PER_TEU, Unit.USD_PER_TEU)


class Provenance(models.TextChoices):
    """
    Panel cell provenance choices
    """

    OBSERVED = "observed", "Observed"
    CALIBRATED = "calibrated", "Calibrated"
    RATIO_IMPUTED = "ratio_imputed", "Ratio imputed"
    INTERPOLATED = "interpolated", "Interpolated"
    ALLOCATED = "allocated", "Allocated"
    CAPACITY_DERIVED = "capacity_derived", "Capacity derived"


class Measure(models.TextChoices):
    PRICE = "price", "Price"
    QUANTITY = "quantity", "Quantity"
    INDEX = "index", "Index"


class VesselType(models.TextChoices):
    NEWBUILDING = "newbuilding", "Newbuilding"
    SECONDHAND = "secondhand", "Secondhand"


@dataclass(frozen=True)
class RawSourceTable:
    """
    Cells of one source in a single unit, keyed by (series key, year).
    """

    source_id: str
    unit: str
    values: Mapping[Tuple[str, int], float]
    provenance: Mapping[Tuple[str, int], str] = field(default_factory=dict)

    def __post_init__(self):
        if self.unit not in Unit.values:
            raise SourceSchemaError(
                f"Source {self.source_id!r} has unknown unit {self.unit!r}",
                {"source_id": self.source_id, "unit": self.unit},
            )

    @property
    def keys(self) -> List[str]:
        return sorted({key for key, _ in self.values})

    def series(self, key: str) -> pd.Series:
        """Values of ``key`` as a float series indexed by year."""
        cells = {year: value for (cell_key, year), value in self.values.items() if cell_key == key}
        return pd.Series(cells, dtype=float).sort_index()

    def provenance_of(self, key: str, year: int) -> str:
        return self.provenance.get((key, year), Provenance.OBSERVED)


@dataclass(frozen=True)
class CpiTable:
    levels: Mapping[int, float]
    base_year: int = CPI_BASE_YEAR

    def __post_init__(self):
        bad = sorted(year for year, level in self.levels.items() if not level > 0)
        if bad:
            raise SourceSchemaError("CPI levels must be positive", {"years": bad})
        if self.base_year not in self.levels:
            raise MissingCpiYear(
                f"CPI base year {self.base_year} is missing", {"year": self.base_year}
            )

    def level(self, year: int) -> float:
        if year not in self.levels:
            raise MissingCpiYear(f"No CPI level for {year}", {"year": year})
        return float(self.levels[year])


@dataclass(frozen=True)
class PanelRow:
    key: str
    year: int
    value: float
    unit: str
    provenance: str


@dataclass(frozen=True)
class CalibrationSolution:
    """Depreciation rate X (USD million per year) and conversion rate a of the secondhand chain."""

    depreciation_rate: float
    conversion_rate: float


@dataclass(frozen=True)
class CellFailure:
    """One panel cell (or whole series when ``year`` is None) that could not be built."""

    source: Optional[str]
    key: str
    year: Optional[int]
    code: str
    message: str

    def as_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "key": self.key,
            "year": self.year,
            "code": self.code,
            "message": self.message,
        }


@dataclass
class BuildLog:
    """
    Append-only record of every factor, anchor and fill applied while building a panel.
    """

    _entries: List[Tuple[str, Optional[int], int, str, Dict[str, Any]]] = field(
        default_factory=list
    )

    def add(self, key: str, year: Optional[int], step: str, **detail) -> None:
        self._entries.append((key, year, len(self._entries), step, detail))

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> List[Dict[str, Any]]:
        """Entries ordered by (key, year, insertion); series-level entries sort first."""
        ordered = sorted(
            self._entries,
            key=lambda entry: (entry[0], -1 if entry[1] is None else entry[1], entry[2]),
        )
        return [
            {"key": key, "year": year, "step": step, "detail": detail}
            for key, year, _, step, detail in ordered
        ]

    def steps(self, key: str) -> List[str]:
        return [entry["step"] for entry in self.entries() if entry["key"] == key]


@dataclass(frozen=True)
class PanelBuildResult:
    rows: Tuple[PanelRow, ...]
    log: BuildLog

    def frame(self) -> pd.DataFrame:
        return rows_to_frame(self.rows)


PANEL_COLUMNS = ["key", "year", "value", "unit", "provenance"]


def rows_to_frame(rows) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(row.key, row.year, row.value, row.unit, row.provenance) for row in rows],
        columns=PANEL_COLUMNS,
    )
    return frame.astype({"year": "int64", "value": "float64"})

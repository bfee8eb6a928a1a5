"""
CSV and JSON readers and writers for panel sources, CPI tables, build configs and panels.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import pandas as pd

from apps.core.exceptions import ConfigError, SourceFileMissing, SourceSchemaError
from apps.core.serializers import validated_data
from apps.core.utils.files import atomic_write_json, atomic_write_text
from apps.core.utils.json import to_json_safe
from apps.panel.models import (
    PANEL_COLUMNS,
    CpiTable,
    PanelRow,
    Provenance,
    RawSourceTable,
    Unit,
    rows_to_frame,
)
from apps.panel.serializers import PanelBuildConfigSerializer

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SOURCE_COLUMNS = ["source_id", "key", "year", "value", "unit"]
CPI_COLUMNS = ["year", "cpi"]
FLOAT_FORMAT = "%.6f"


def read_csv(path: PathLike, required: Sequence[str]) -> pd.DataFrame:
    """
    Read a CSV with the given required columns.

    Raises:
        SourceFileMissing: the file does not exist.
        SourceSchemaError: a required column is missing (reported at line 1).
    """
    path = Path(path)
    if not path.is_file():
        raise SourceFileMissing(f"File not found: {path}", {"path": str(path)})
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise SourceSchemaError(f"Unreadable CSV {path}: {exc}", {"path": str(path)}) from exc
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise SourceSchemaError(
            f"{path}: missing column(s) {', '.join(missing)}",
            {"path": str(path), "line": 1, "missing": missing},
        )
    return frame


def _numeric(frame: pd.DataFrame, column: str, path: Path, integer: bool = False) -> pd.Series:
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    bad = values.isna()
    if integer:
        bad |= values.fillna(0.0).mod(1.0) != 0.0
    if bad.any():
        line = int(bad.idxmax()) + 2
        raise SourceSchemaError(
            f"{path}:{line}: {column} {frame[column].iloc[line - 2]!r} is not a valid number",
            {"path": str(path), "line": line, "column": column},
        )
    return values.astype("int64") if integer else values.astype(float)


def load_sources(paths: Iterable[PathLike]) -> List[RawSourceTable]:
    """
    Load long-format source CSVs (source_id,key,year,value,unit[,provenance]).

    A source id may span files but must keep a single unit; (source, key, year) cells are unique.
    """
    cells: Dict[str, Dict[Any, float]] = {}
    tags: Dict[str, Dict[Any, str]] = {}
    units: Dict[str, str] = {}
    origins: Dict[Any, str] = {}
    for raw_path in paths:
        path = Path(raw_path)
        frame = read_csv(path, SOURCE_COLUMNS)
        years = _numeric(frame, "year", path, integer=True)
        values = _numeric(frame, "value", path)
        has_provenance = "provenance" in frame.columns
        for position in range(len(frame)):
            line = position + 2
            source_id = frame["source_id"].iloc[position].strip()
            key = frame["key"].iloc[position].strip()
            unit = frame["unit"].iloc[position].strip()
            where = {"path": str(path), "line": line}
            if not source_id or not key:
                raise SourceSchemaError(f"{path}:{line}: empty source_id or key", where)
            if unit not in Unit.values:
                raise SourceSchemaError(f"{path}:{line}: unknown unit {unit!r}", where)
            if units.setdefault(source_id, unit) != unit:
                raise SourceSchemaError(
                    f"{path}:{line}: source {source_id!r} mixes units "
                    f"{units[source_id]} and {unit}",
                    where,
                )
            cell = (key, int(years.iloc[position]))
            if cell in cells.setdefault(source_id, {}):
                raise SourceSchemaError(
                    f"{path}:{line}: duplicate cell {source_id}/{key}/{cell[1]} "
                    f"(first seen at {origins[(source_id,) + cell]})",
                    where,
                )
            cells[source_id][cell] = float(values.iloc[position])
            origins[(source_id,) + cell] = f"{path}:{line}"
            if has_provenance:
                tag = frame["provenance"].iloc[position].strip() or Provenance.OBSERVED
                if tag not in Provenance.values:
                    raise SourceSchemaError(f"{path}:{line}: unknown provenance {tag!r}", where)
                tags.setdefault(source_id, {})[cell] = tag
    tables = [
        RawSourceTable(source_id, units[source_id], cells[source_id], tags.get(source_id, {}))
        for source_id in sorted(cells)
    ]
    logger.info("Loaded %s source table(s)", len(tables))
    return tables


def load_cpi(path: PathLike, base_year: int) -> CpiTable:
    path = Path(path)
    frame = read_csv(path, CPI_COLUMNS)
    years = _numeric(frame, "year", path, integer=True)
    levels = _numeric(frame, "cpi", path)
    if years.duplicated().any():
        line = int(years.duplicated().idxmax()) + 2
        raise SourceSchemaError(
            f"{path}:{line}: duplicate CPI year", {"path": str(path), "line": line}
        )
    return CpiTable({int(y): float(v) for y, v in zip(years, levels)}, base_year=base_year)


def load_json_config(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}", {"path": str(path)})
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}: invalid JSON ({exc.msg})",
            {"path": str(path), "line": exc.lineno},
        ) from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: config must be a JSON object", {"path": str(path)})
    return payload


def load_panel(path: PathLike) -> pd.DataFrame:
    """
    Read a panel or generic series CSV with at least key,year,value columns.
    """
    path = Path(path)
    frame = read_csv(path, ["key", "year", "value"])
    frame["key"] = frame["key"].str.strip()
    frame["year"] = _numeric(frame, "year", path, integer=True)
    frame["value"] = _numeric(frame, "value", path)
    for column in frame.columns:
        if column.startswith("z_"):
            frame[column] = _numeric(frame, column, path)
    return frame


def panel_as_sources(panel: pd.DataFrame, prefix: str = "panel") -> List[RawSourceTable]:
    """
    One source table per unit of a built panel, keeping each cell's provenance.
    """
    tables = []
    for unit, group in sorted(panel.groupby("unit"), key=lambda item: item[0]):
        cells = {(row.key, int(row.year)): float(row.value) for row in group.itertuples()}
        tags = {(row.key, int(row.year)): row.provenance for row in group.itertuples()}
        tables.append(RawSourceTable(f"{prefix}_{unit}", unit, cells, tags))
    return tables


def panel_csv(rows: Iterable[PanelRow]) -> str:
    frame = rows_to_frame(rows)
    return frame.to_csv(
        index=False, columns=PANEL_COLUMNS, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def write_panel(rows: Iterable[PanelRow], path: PathLike) -> Path:
    return atomic_write_text(path, panel_csv(rows))


def write_build_log(entries: List[Dict[str, Any]], path: PathLike) -> Path:
    return atomic_write_json(path, to_json_safe(entries))


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    return atomic_write_text(
        path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    )


def load_build_config(path: PathLike) -> Dict[str, Any]:
    """Read and validate a panel build config file."""
    return dict(validated_data(PanelBuildConfigSerializer, load_json_config(path), str(path)))

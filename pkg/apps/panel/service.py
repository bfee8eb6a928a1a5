"""
Panel build service
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from apps.core.exceptions import (
    ConfigError,
    LinerBreaksError,
    NonPositiveInput,
    PanelBuildError,
    TooFewObservations,
    ZeroReference,
)
from apps.core.serializers import validated_data
from apps.panel import conversions
from apps.panel.imputation import (
    allocate_directional,
    calibrate_overlap,
    closest_reference_year,
    common_years,
    fixed_ratio_impute,
    interpolate_linear,
)
from apps.panel.models import (
    CANONICAL_UNITS,
    INDUSTRY_KEYS,
    PRICE_UNITS,
    ROUTE_KEYS,
    BuildLog,
    CalibrationSolution,
    CellFailure,
    CpiTable,
    Measure,
    PanelBuildResult,
    PanelRow,
    Provenance,
    RawSourceTable,
    Unit,
    VesselType,
)
from apps.panel.serializers import PanelBuildConfigSerializer

logger = logging.getLogger(__name__)

MEASURE_UNITS = {
    Measure.PRICE: {
        Unit.USD_PER_100TON_MILE,
        Unit.USD_PER_FEU,
        Unit.USD_PER_TEU,
        Unit.USD_PER_DWT_VESSEL,
        Unit.USD_PER_LTD,
        Unit.USD_1995_PER_TEU,
    },
    Measure.QUANTITY: {Unit.TEU_CAPACITY, Unit.THOUSAND_TEU, Unit.MILLION_TON, Unit.MILLION_TEU},
    Measure.INDEX: {Unit.INDEX_1995_100},
}


@dataclass
class SeriesState:
    """
    Working copy of one series while it moves through the pipeline.
    """

    key: str
    measure: str
    values: Dict[int, float] = field(default_factory=dict)
    provenance: Dict[int, str] = field(default_factory=dict)
    real: bool = False

    def series(self) -> pd.Series:
        return pd.Series(self.values, dtype=float).sort_index()

    def fill(self, year: int, value: float, provenance: str) -> None:
        self.values[int(year)] = float(value)
        self.provenance[int(year)] = provenance

    @property
    def unit(self) -> str:
        if self.measure == Measure.QUANTITY:
            return Unit.MILLION_TEU
        if self.measure == Measure.INDEX:
            return Unit.INDEX_1995_100
        return Unit.USD_1995_PER_TEU if self.real else Unit.USD_PER_TEU


@dataclass
class BuildContext:
    config: Dict[str, Any]
    sources: Dict[str, RawSourceTable]
    cpi: Optional[CpiTable]
    log: BuildLog = field(default_factory=BuildLog)
    failures: List[CellFailure] = field(default_factory=list)
    _solution: Optional[CalibrationSolution] = None

    def fail(self, source: Optional[str], key: str, year: Optional[int], exc: LinerBreaksError):
        self.failures.append(CellFailure(source, key, year, exc.code, exc.message))

    @property
    def secondhand_solution(self) -> CalibrationSolution:
        if self._solution is None:
            self._solution = conversions.secondhand_calibration()
            if self._solution.depreciation_rate < 0:
                self.log.add(
                    "secondhand",
                    None,
                    "negative_depreciation",
                    depreciation_rate=self._solution.depreciation_rate,
                    conversion_rate=self._solution.conversion_rate,
                )
        return self._solution


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    sd: float
    min: float
    max: float


@dataclass(frozen=True)
class SummaryRow:
    panel: str
    variable: str
    stats: SummaryStats


class PanelBuildService:
    """
    Service reconstructing the route and industry panels from raw sources.
    """

    def build_panel(
        self,
        sources: Iterable[RawSourceTable],
        cpi: Optional[CpiTable],
        config: Dict[str, Any],
    ) -> PanelBuildResult:
        """
        Run every configured series through convert, splice, allocate, ratio-impute, interpolate,
        deflate and window.

        Args:
            sources (Iterable[RawSourceTable]): Raw source tables, one unit per source id.
            cpi (CpiTable): CPI levels used for deflation.
            config (dict): Panel build configuration (validated here).

        Returns:
            PanelBuildResult: Rows sorted by (key, year, unit) and the build log.

        Raises:
            PanelBuildError: One or more cells failed; carries the rows that did build.
        """
        config = validated_data(PanelBuildConfigSerializer, config)
        by_id: Dict[str, RawSourceTable] = {}
        for table in sources:
            if table.source_id in by_id:
                raise ConfigError(
                    f"Source {table.source_id!r} is given twice", {"source_id": table.source_id}
                )
            by_id[table.source_id] = table
        context = BuildContext(config=config, sources=by_id, cpi=cpi)

        states: Dict[Tuple[str, str], SeriesState] = {}
        for series_config in config["series"]:
            state = self._assemble(context, series_config)
            if state is not None:
                states[(state.key, state.measure)] = state

        for allocation in config["allocations"]:
            self._allocate(context, allocation, states)

        rows: List[PanelRow] = []
        for series_config in config["series"]:
            state = states.get((series_config["key"], series_config["measure"]))
            if state is None:
                continue
            self._impute(context, series_config, state)
            if series_config["interpolate"]:
                self._interpolate(context, state)
            if series_config["deflate"] and not state.real:
                self._deflate(context, state)
            rows.extend(self._emit(context, series_config, state))

        rows.sort(key=lambda row: (row.key, row.year, row.unit))
        result = PanelBuildResult(rows=tuple(rows), log=context.log)
        if context.failures:
            failures = sorted(
                context.failures,
                key=lambda failure: (
                    failure.key,
                    -1 if failure.year is None else failure.year,
                    failure.source or "",
                ),
            )
            logger.error("Panel build failed for %s cell(s)", len(failures))
            raise PanelBuildError(failures, rows=list(result.rows), log=context.log)
        logger.info("Built panel with %s rows from %s sources", len(rows), len(by_id))
        return result

    def _convert(
        self,
        context: BuildContext,
        table: RawSourceTable,
        key: str,
        measure: str,
        vessel_type: Optional[str] = None,
        log_key: Optional[str] = None,
    ) -> Optional[SeriesState]:
        """
        Convert one source series to nominal USD per TEU (or million TEU).
        """
        log_key = log_key or key
        if table.unit not in MEASURE_UNITS[measure]:
            context.fail(
                table.source_id,
                log_key,
                None,
                ConfigError(f"Unit {table.unit} cannot feed a {measure} series"),
            )
            return None
        state = SeriesState(key=log_key, measure=measure, real=table.unit in CANONICAL_UNITS)
        raw = table.series(key)
        for year, value in raw.items():
            year = int(year)
            try:
                converted, detail = self._convert_cell(context, table, log_key, value, vessel_type)
            except LinerBreaksError as exc:
                context.fail(table.source_id, log_key, year, exc)
                continue
            provenance = table.provenance_of(key, year)
            if table.unit == Unit.TEU_CAPACITY and provenance == Provenance.OBSERVED:
                provenance = Provenance.CAPACITY_DERIVED
            state.fill(year, converted, provenance)
            if detail is not None:
                context.log.add(
                    log_key, year, "convert", source=table.source_id, unit=table.unit, **detail
                )
        return state

    def _convert_cell(
        self,
        context: BuildContext,
        table: RawSourceTable,
        key: str,
        value: float,
        vessel_type: Optional[str],
    ) -> Tuple[float, Optional[Dict[str, Any]]]:
        config = context.config
        vessel = config["vessel"]
        unit = table.unit
        if unit in CANONICAL_UNITS:
            return value, None
        if unit in (Unit.USD_PER_TEU, Unit.INDEX_1995_100):
            return value, {"raw": value, "value": value}
        if unit == Unit.USD_PER_FEU:
            converted = conversions.feu_to_teu(value, config["teu_per_feu"])
            return converted, {
                "raw": value,
                "teu_per_feu": config["teu_per_feu"],
                "value": converted,
            }
        if unit == Unit.USD_PER_100TON_MILE:
            miles = config["route_miles"].get(key)
            if miles is None or "tons_per_teu" not in config:
                raise ConfigError(
                    f"Ton-mile conversion of {key!r} needs route_miles and tons_per_teu",
                    {"key": key},
                )
            converted = conversions.tonmile_rate_to_teu(value, miles, config["tons_per_teu"])
            return converted, {
                "raw": value,
                "miles": miles,
                "tons_per_teu": config["tons_per_teu"],
                "value": converted,
            }
        if unit == Unit.TEU_CAPACITY:
            quantity = conversions.capacity_to_quantity(value, config["utilization"])
            return quantity / 1e6, {"raw": value, "utilization": config["utilization"]}
        if unit == Unit.THOUSAND_TEU:
            return value / 1000.0, {"raw": value, "value": value / 1000.0}
        if unit == Unit.MILLION_TON:
            tons_per_teu = config.get("quantity_tons_per_teu")
            if tons_per_teu is None:
                raise ConfigError("million_ton quantities need quantity_tons_per_teu", {"key": key})
            return value / tons_per_teu, {"raw": value, "tons_per_teu": tons_per_teu}
        if unit == Unit.USD_PER_LTD:
            converted = conversions.scrap_per_teu(
                value, vessel["ltd_divisor"], vessel["dwt_per_teu"]
            )
            return converted, {"raw": value, "value": converted}
        if unit == Unit.USD_PER_DWT_VESSEL:
            if vessel_type == VesselType.NEWBUILDING:
                converted = conversions.newbuilding_per_teu(
                    value, vessel["bulk_to_container_factor"]
                )
                return converted, {
                    "raw": value,
                    "bulk_to_container_factor": vessel["bulk_to_container_factor"],
                    "value": converted,
                }
            if vessel_type == VesselType.SECONDHAND:
                solution = context.secondhand_solution
                chain = conversions.secondhand_chain(
                    value,
                    solution,
                    vessel["liner_to_container_factor"],
                    vessel["age_gap_years"],
                )
                return chain.result, {
                    "raw": chain.raw,
                    "depreciation_rate": solution.depreciation_rate,
                    "conversion_rate": solution.conversion_rate,
                    "age_adjusted": chain.age_adjusted,
                    "converted": chain.converted,
                    "per_12000dwt": chain.per_12000dwt,
                    "per_vessel": chain.per_vessel,
                    "per_teu": chain.per_teu,
                    "value": chain.result,
                }
            raise ConfigError(f"Vessel prices of {key!r} need a vessel_type", {"key": key})
        raise ConfigError(f"Unsupported unit {unit}", {"unit": unit})

    def _assemble(
        self, context: BuildContext, series_config: Dict[str, Any]
    ) -> Optional[SeriesState]:
        """
        Convert and splice the configured sources of one series.
        """
        key, measure = series_config["key"], series_config["measure"]
        splice = series_config["splice"]
        base_entry = splice[0]
        base_table = context.sources.get(base_entry["source"])
        if base_table is None:
            logger.warning("Skipping %s: base source %s not supplied", key, base_entry["source"])
            return None

        state = self._convert(
            context,
            base_table,
            base_entry.get("key", key),
            measure,
            series_config.get("vessel_type"),
            log_key=key,
        )
        if state is None:
            return None

        for entry in splice[1:]:
            table = context.sources.get(entry["source"])
            if table is None:
                logger.warning("Splice source %s for %s not supplied", entry["source"], key)
                continue
            incoming = self._convert(
                context,
                table,
                entry.get("key", key),
                measure,
                series_config.get("vessel_type"),
                log_key=key,
            )
            if incoming is None:
                continue
            if "factor" in entry:
                factor = entry["factor"]
                context.log.add(key, None, "splice", source=table.source_id, factor=factor)
            else:
                try:
                    calibration = calibrate_overlap(
                        state.series(), incoming.series(), entry.get("overlap_years")
                    )
                except LinerBreaksError as exc:
                    context.fail(table.source_id, key, None, exc)
                    continue
                factor = calibration.factor
                context.log.add(
                    key,
                    None,
                    "splice",
                    source=table.source_id,
                    factor=factor,
                    overlap=[list(pair) for pair in calibration.pairs],
                    ratios=list(calibration.ratios),
                    adjacent=calibration.adjacent,
                    max_discontinuity=calibration.max_discontinuity,
                    flagged=calibration.flagged,
                )
                if calibration.flagged:
                    logger.warning(
                        "Splice of %s onto %s jumps by %.1f%% at the overlap",
                        table.source_id,
                        key,
                        100 * calibration.max_discontinuity,
                    )
            for year, value in sorted(incoming.values.items()):
                if year in state.values:
                    continue
                state.fill(year, factor * value, Provenance.CALIBRATED)
                context.log.add(
                    key,
                    year,
                    "calibrated",
                    source=table.source_id,
                    factor=factor,
                    value=factor * value,
                )
        return state

    def _allocate(
        self,
        context: BuildContext,
        allocation: Dict[str, Any],
        states: Dict[Tuple[str, str], SeriesState],
    ) -> None:
        """
        Split a two-way total into directions missing in both series.
        """
        source_id = allocation["source"]
        east_key, west_key = allocation["eastbound"], allocation["westbound"]
        table = context.sources.get(source_id)
        if table is None:
            logger.warning("Allocation source %s not supplied", source_id)
            return
        measure = allocation.get("measure") or next(
            (measure for measure, units in MEASURE_UNITS.items() if table.unit in units), None
        )
        east = states.get((east_key, measure))
        west = states.get((west_key, measure))
        if east is None or west is None:
            context.fail(
                source_id,
                allocation["total_key"],
                None,
                ConfigError(
                    f"Allocation needs built {measure} series {east_key!r} and {west_key!r}"
                ),
            )
            return
        total = self._convert(context, table, allocation["total_key"], measure)
        if total is None:
            return

        reference_years = common_years(east.series(), west.series())
        for year, value in sorted(total.values.items()):
            if year in east.values or year in west.values:
                continue
            reference = closest_reference_year(reference_years, year)
            if reference is None:
                context.fail(
                    source_id,
                    allocation["total_key"],
                    year,
                    ZeroReference("No year has both directions observed"),
                )
                continue
            try:
                east_value, west_value = allocate_directional(
                    value, east.values[reference], west.values[reference]
                )
            except LinerBreaksError as exc:
                context.fail(source_id, allocation["total_key"], year, exc)
                continue
            east.fill(year, east_value, Provenance.ALLOCATED)
            west.fill(year, west_value, Provenance.ALLOCATED)
            for state, share in ((east, east_value), (west, west_value)):
                context.log.add(
                    state.key,
                    year,
                    "allocated",
                    source=source_id,
                    total=value,
                    reference_year=reference,
                    value=share,
                )

    def _impute(
        self, context: BuildContext, series_config: Dict[str, Any], state: SeriesState
    ) -> None:
        impute = series_config.get("impute")
        if not impute:
            return
        table = context.sources.get(impute["reference_source"])
        if table is None:
            logger.warning(
                "Reference source %s for %s not supplied", impute["reference_source"], state.key
            )
            return
        reference = self._convert(
            context,
            table,
            impute.get("reference_key", state.key),
            state.measure if table.unit in MEASURE_UNITS[state.measure] else Measure.INDEX,
            series_config.get("vessel_type"),
            log_key=state.key,
        )
        if reference is None:
            return
        try:
            result = fixed_ratio_impute(
                state.series(), reference.series(), impute["anchor_years"], impute.get("years")
            )
        except LinerBreaksError as exc:
            context.fail(table.source_id, state.key, None, exc)
            return
        context.log.add(
            state.key,
            None,
            "impute_ratio",
            source=table.source_id,
            anchors=list(impute["anchor_years"]),
            ratio=result.ratio,
        )
        for year in result.filled_years:
            state.fill(year, result.series.loc[year], Provenance.RATIO_IMPUTED)
            context.log.add(
                state.key,
                year,
                "ratio_imputed",
                source=table.source_id,
                reference=float(reference.values[year]),
                value=float(result.series.loc[year]),
            )

    def _interpolate(self, context: BuildContext, state: SeriesState) -> None:
        try:
            result = interpolate_linear(state.series())
        except LinerBreaksError as exc:
            context.fail(None, state.key, None, exc)
            return
        for year in result.filled_years:
            state.fill(year, result.series.loc[year], Provenance.INTERPOLATED)
            context.log.add(state.key, year, "interpolated", value=float(result.series.loc[year]))

    def _deflate(self, context: BuildContext, state: SeriesState) -> None:
        if context.cpi is None:
            context.fail("cpi", state.key, None, ConfigError("Deflation needs a CPI table"))
            state.values.clear()
            return
        for year in sorted(state.values):
            try:
                real = conversions.cpi_adjust(state.values[year], year, context.cpi)
            except LinerBreaksError as exc:
                context.fail("cpi", state.key, year, exc)
                del state.values[year]
                continue
            context.log.add(
                state.key,
                year,
                "deflate",
                cpi=context.cpi.level(year),
                factor=context.cpi.level(context.cpi.base_year) / context.cpi.level(year),
            )
            state.values[year] = real
        state.real = True

    def _emit(
        self, context: BuildContext, series_config: Dict[str, Any], state: SeriesState
    ) -> List[PanelRow]:
        window = series_config.get("window")
        rows = []
        for year in sorted(state.values):
            if window and not window[0] <= year <= window[1]:
                continue
            value = state.values[year]
            if state.measure == Measure.PRICE and not value > 0:
                context.fail(
                    None, state.key, year, NonPositiveInput(f"Price {value} is not positive")
                )
                continue
            if state.measure == Measure.QUANTITY and value < 0:
                context.fail(
                    None, state.key, year, NonPositiveInput(f"Quantity {value} is negative")
                )
                continue
            rows.append(PanelRow(state.key, year, value, state.unit, state.provenance[year]))
        return rows

    def summary_stats(
        self, panel: pd.DataFrame, keys: Optional[Sequence[str]] = None, units=None
    ) -> SummaryStats:
        """
        N, mean, sample standard deviation (N - 1), min and max of the selected panel values.

        Raises:
            TooFewObservations: fewer than two values selected.
        """
        selected = panel
        if keys is not None:
            selected = selected[selected["key"].isin(list(keys))]
        if units is not None and "unit" in selected.columns:
            selected = selected[selected["unit"].isin([str(unit) for unit in units])]
        values = selected["value"].astype(float)
        if len(values) < 2:
            raise TooFewObservations(
                f"Summary statistics need at least 2 values (got {len(values)})",
                {"n": int(len(values))},
            )
        return SummaryStats(
            n=int(values.size),
            mean=float(values.mean()),
            sd=float(values.std(ddof=1)),
            min=float(values.min()),
            max=float(values.max()),
        )

    def summary_table(
        self,
        panel: pd.DataFrame,
        keys: Optional[Sequence[str]] = None,
        route_keys: Sequence[str] = ROUTE_KEYS,
        industry_keys: Sequence[str] = INDUSTRY_KEYS,
    ) -> List[SummaryRow]:
        """
        Panel (a) pools the routes per measure; panel (b) reports every industry series.

        Selected keys outside both lists get a panel (b) row of their own.
        """
        if keys is not None:
            industry_keys = [key for key in keys if key not in route_keys]
            route_keys = [key for key in route_keys if key in keys]
        groups = [
            ("a", "price", list(route_keys), PRICE_UNITS),
            ("a", "quantity", list(route_keys), (Unit.MILLION_TEU,)),
        ] + [("b", key, [key], None) for key in industry_keys]

        table = []
        for panel_name, variable, group_keys, units in groups:
            if not group_keys:
                continue
            try:
                stats = self.summary_stats(panel, group_keys, units)
            except TooFewObservations as exc:
                if exc.details["n"]:
                    logger.warning("Skipping %s/%s: %s", panel_name, variable, exc.message)
                continue
            table.append(SummaryRow(panel_name, variable, stats))
        return table


panel_build_service = PanelBuildService()

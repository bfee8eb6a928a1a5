"""
Report service
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
from django.conf import settings
from django.utils.text import slugify

from apps.core.exceptions import (
    ConfigError,
    InvalidParameter,
    InvalidSeries,
    LinerBreaksError,
    SourceSchemaError,
)
from apps.core.serializers import validated_data
from apps.core.utils.files import atomic_write_json
from apps.inference.service import break_confidence_interval, robust_segment_covariance
from apps.panel import io as panel_io
from apps.panel.service import SummaryRow, panel_build_service
from apps.reports.models import (
    AnalysisConfig,
    BicRow,
    BreakReport,
    BreakRow,
    BreaksRun,
    PlotPoint,
    SegmentRow,
    SkippedSeries,
    SkipReason,
    YearRange,
)
from apps.reports.serializers import AnalysisConfigSerializer, BreakReportSerializer
from apps.segmentation.types import TimeSeries
from apps.selection.service import select_breaks

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_OUTPUT_DIR = "out"
STATS_COLUMNS = ["panel", "variable", "n", "mean", "sd", "min", "max"]


def resolve_output_dir(flag: Optional[str], config_value: Optional[str] = None) -> Path:
    """--out, then BREAKS_OUTPUT_DIR, then the config file's out_dir, then ./out."""
    return Path(flag or settings.BREAKS_OUTPUT_DIR or config_value or DEFAULT_OUTPUT_DIR)


class SeriesSource:
    """
    One selectable series of an input frame, identified by its key (or key@unit when the key
    carries several units).
    """

    def __init__(self, series_id: str, key: str, unit: Optional[str], frame: pd.DataFrame):
        self.series_id = series_id
        self.key = key
        self.unit = unit
        self.frame = frame

    def time_series(self, window: Optional[YearRange] = None) -> TimeSeries:
        frame = self.frame.sort_values("year", kind="stable")
        if frame["year"].duplicated().any():
            years = sorted(set(frame.loc[frame["year"].duplicated(), "year"].tolist()))
            raise InvalidSeries(
                f"Series {self.series_id!r} repeats years {years}", {"years": years}
            )
        if window is not None:
            first, last = int(frame["year"].min()), int(frame["year"].max())
            if window[0] < first or window[1] > last:
                raise InvalidParameter(
                    f"Window {list(window)} lies outside {self.series_id!r} data "
                    f"({first}-{last})",
                    {"window": list(window), "first": first, "last": last},
                )
            frame = frame[frame["year"].between(window[0], window[1])]
        regressors = [column for column in frame.columns if column.startswith("z_")]
        return TimeSeries(
            self.series_id,
            frame["year"].to_numpy(),
            frame["value"].to_numpy(dtype=float),
            frame[regressors].to_numpy(dtype=float) if regressors else None,
        )


class ReportService:
    """
    Service wiring panel construction and break analysis into report files.
    """

    def analysis_config(self, payload: Dict[str, Any], source: Optional[str] = None):
        data = validated_data(AnalysisConfigSerializer, payload, source)
        return AnalysisConfigSerializer().create(data)

    def series_sources(self, frame: pd.DataFrame) -> List[SeriesSource]:
        """Split a key,year,value[,unit] frame into series sorted by id."""
        sources = []
        if "unit" not in frame.columns:
            for key, group in frame.groupby("key", sort=True):
                sources.append(SeriesSource(key, key, None, group))
            return sources
        for key, by_key in frame.groupby("key", sort=True):
            units = sorted(by_key["unit"].unique())
            for unit in units:
                group = by_key[by_key["unit"] == unit]
                series_id = key if len(units) == 1 else f"{key}@{unit}"
                sources.append(SeriesSource(series_id, key, unit, group))
        return sorted(sources, key=lambda source: source.series_id)

    def select(
        self, sources: List[SeriesSource], selectors: Sequence[str]
    ) -> Tuple[List[SeriesSource], List[SkippedSeries]]:
        """Series matching any selector by id or key; unmatched selectors are reported."""
        if not selectors:
            return sources, []
        chosen = [
            source
            for source in sources
            if source.series_id in selectors or source.key in selectors
        ]
        missing = [
            SkippedSeries(selector, SkipReason.NOT_FOUND, f"No series matches {selector!r}")
            for selector in selectors
            if not any(selector in (source.series_id, source.key) for source in sources)
        ]
        return chosen, missing

    def analyze(
        self,
        series: TimeSeries,
        config: AnalysisConfig,
        key: Optional[str] = None,
        unit: Optional[str] = None,
        window: Optional[YearRange] = None,
    ) -> BreakReport:
        """
        Select the break count by BIC, then estimate regime covariances and break intervals.
        """
        table, chosen = select_breaks(series, config.max_m, config.min_len)
        inference = robust_segment_covariance(series, chosen.breaks, config.bandwidth)
        intervals = []
        if chosen.m:
            intervals = break_confidence_interval(
                series,
                chosen.breaks,
                config.level,
                het_regressors=config.het_regressors,
                het_errors=config.het_errors,
                kernel_bandwidth=config.bandwidth,
                inference=inference,
            )

        def years(breaks) -> Tuple[int, ...]:
            return tuple(series.period_of(index) for index in breaks.break_indices)

        fitted = chosen.fitted_values(series)
        return BreakReport(
            series_id=series.series_id,
            key=key or series.series_id,
            unit=unit,
            t_len=series.t_len,
            q=series.q,
            min_len=config.min_len,
            max_m=config.max_m,
            level=config.level,
            window=window,
            chosen_m=table.chosen_m,
            break_indices=chosen.breaks.break_indices,
            break_years=years(chosen.breaks),
            bic_table=tuple(
                BicRow(
                    m=row.m,
                    total_ssr=row.total_ssr,
                    bic=row.bic,
                    feasible=row.feasible,
                    degenerate=row.degenerate,
                    break_years=None if row.breaks is None else years(row.breaks),
                )
                for row in table.rows
            ),
            intervals=tuple(
                BreakRow(
                    break_index=interval.break_index,
                    year=interval.point_period,
                    lower_year=interval.lower_period,
                    upper_year=interval.upper_period,
                    level=interval.level,
                    status=interval.status,
                )
                for interval in intervals
            ),
            segments=tuple(
                SegmentRow(
                    start_year=series.period_of(fit.start),
                    end_year=series.period_of(fit.end),
                    n_obs=fit.n_obs,
                    coefficients=tuple(float(value) for value in fit.coefficients),
                    standard_errors=tuple(float(value) for value in estimate.standard_errors),
                    ssr=float(fit.ssr),
                )
                for fit, estimate in zip(chosen.segment_fits, inference.segments)
            ),
            plot=tuple(
                PlotPoint(year=int(year), observed=float(observed), fitted=float(value))
                for year, observed, value in zip(series.periods, series.values, fitted)
            ),
        )

    def _analyze_source(
        self, source: SeriesSource, config: AnalysisConfig
    ) -> Union[BreakReport, SkippedSeries]:
        window = config.window_for(source.series_id, source.key)
        try:
            series = source.time_series(window)
            return self.analyze(series, config, source.key, source.unit, window)
        except LinerBreaksError as exc:
            logger.warning("Skipping %s: %s", source.series_id, exc.message)
            return SkippedSeries(source.series_id, exc.code, exc.message)
        except Exception as exc:
            logger.error("Analysis of %s failed", source.series_id, exc_info=True)
            return SkippedSeries(source.series_id, SkipReason.FAILED, str(exc))

    def run(self, config: AnalysisConfig, workers: Optional[int] = None) -> BreaksRun:
        """
        Analyse every selected series; failures are isolated per series.
        """
        frame = pd.concat([panel_io.load_panel(path) for path in config.inputs], ignore_index=True)
        sources, skipped = self.select(self.series_sources(frame), config.series)

        workers = workers or settings.BREAKS_WORKERS
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            outcomes = list(pool.map(lambda source: self._analyze_source(source, config), sources))

        reports = [outcome for outcome in outcomes if isinstance(outcome, BreakReport)]
        skipped += [outcome for outcome in outcomes if isinstance(outcome, SkippedSeries)]
        logger.info("Analysed %s series, skipped %s", len(reports), len(skipped))
        return BreaksRun(
            reports=tuple(sorted(reports, key=lambda report: report.series_id)),
            skipped=tuple(sorted(skipped, key=lambda item: item.series_id)),
        )

    def write(self, run: BreaksRun, out_dir: PathLike) -> List[Path]:
        """
        Write every report as JSON plus BIC, break and plot CSVs, and a run summary.
        """
        out_dir = Path(out_dir)
        written = []
        slugs = self._slugs([report.series_id for report in run.reports])
        for report in run.reports:
            slug = slugs[report.series_id]
            written.append(
                atomic_write_json(out_dir / f"{slug}.json", BreakReportSerializer(report).data)
            )
            written.append(
                panel_io.write_frame(self.bic_frame(report), out_dir / f"{slug}_bic.csv")
            )
            written.append(
                panel_io.write_frame(self.breaks_frame(report), out_dir / f"{slug}_breaks.csv")
            )
            written.append(
                panel_io.write_frame(self.plot_frame(report), out_dir / f"{slug}_plot.csv")
            )

        summary = {
            "series": [
                {
                    "series_id": report.series_id,
                    "file": f"{slugs[report.series_id]}.json",
                    "chosen_m": report.chosen_m,
                    "break_years": list(report.break_years),
                }
                for report in run.reports
            ],
            "skipped": [
                {"series_id": item.series_id, "code": item.code, "message": item.message}
                for item in run.skipped
            ],
        }
        written.append(atomic_write_json(out_dir / "summary.json", summary))
        return written

    def load_report(self, path: PathLike) -> BreakReport:
        """Parse a written report JSON back into a BreakReport."""
        payload = panel_io.load_json_config(path)
        serializer = BreakReportSerializer(data=payload)
        if not serializer.is_valid():
            raise SourceSchemaError(
                f"Invalid break report {path}", {"path": str(path), "errors": serializer.errors}
            )
        return serializer.save()

    @staticmethod
    def _slugs(series_ids: Iterable[str]) -> Dict[str, str]:
        slugs: Dict[str, str] = {}
        taken = set()
        for series_id in series_ids:
            base = slugify(series_id.replace("@", "-")) or "series"
            slug, suffix = base, 2
            while slug in taken:
                slug, suffix = f"{base}-{suffix}", suffix + 1
            taken.add(slug)
            slugs[series_id] = slug
        return slugs

    @staticmethod
    def bic_frame(report: BreakReport) -> pd.DataFrame:
        frame = pd.DataFrame(
            [
                (
                    row.m,
                    row.total_ssr,
                    row.bic,
                    row.feasible,
                    row.degenerate,
                    None if row.break_years is None else " ".join(map(str, row.break_years)),
                )
                for row in report.bic_table
            ],
            columns=["m", "total_ssr", "bic", "feasible", "degenerate", "break_years"],
        )
        return frame.astype({"total_ssr": "float64", "bic": "float64"})

    @staticmethod
    def breaks_frame(report: BreakReport) -> pd.DataFrame:
        frame = pd.DataFrame(
            [
                (
                    position,
                    row.break_index,
                    row.year,
                    row.lower_year,
                    row.upper_year,
                    row.level,
                    str(row.status),
                )
                for position, row in enumerate(report.intervals, start=1)
            ],
            columns=[
                "break",
                "break_index",
                "year",
                "lower_year",
                "upper_year",
                "level",
                "status",
            ],
        )
        return frame.astype({"lower_year": "Int64", "upper_year": "Int64", "level": "float64"})

    @staticmethod
    def plot_frame(report: BreakReport) -> pd.DataFrame:
        return pd.DataFrame(
            [(point.year, point.observed, point.fitted) for point in report.plot],
            columns=["year", "observed", "fitted"],
        ).astype({"observed": "float64", "fitted": "float64"})

    def build_panel(
        self,
        inputs: Sequence[PathLike],
        config_path: PathLike,
        out_dir: PathLike,
        cpi_path: Optional[PathLike] = None,
    ) -> List[Path]:
        """
        Build the panel from source CSVs and write panel.csv and build_log.json.
        """
        config = panel_io.load_build_config(config_path)
        sources = panel_io.load_sources(inputs)
        cpi = panel_io.load_cpi(cpi_path, config["cpi_base_year"]) if cpi_path else None
        result = panel_build_service.build_panel(sources, cpi, config)
        out_dir = Path(out_dir)
        return [
            panel_io.write_panel(result.rows, out_dir / "panel.csv"),
            panel_io.write_build_log(result.log.entries(), out_dir / "build_log.json"),
        ]

    def summary(
        self, inputs: Sequence[PathLike], keys: Optional[Sequence[str]] = None
    ) -> List[SummaryRow]:
        if not inputs:
            raise ConfigError("At least one panel CSV is required", {})
        frame = pd.concat([panel_io.load_panel(path) for path in inputs], ignore_index=True)
        rows = panel_build_service.summary_table(frame, keys)
        if not rows:
            logger.warning("Summary selection is empty; writing an empty table")
        return rows

    def write_summary(self, rows: List[SummaryRow], out_dir: PathLike) -> Path:
        frame = pd.DataFrame(
            [
                (
                    row.panel,
                    row.variable,
                    row.stats.n,
                    row.stats.mean,
                    row.stats.sd,
                    row.stats.min,
                    row.stats.max,
                )
                for row in rows
            ],
            columns=STATS_COLUMNS,
        )
        frame = frame.astype({column: "float64" for column in STATS_COLUMNS[3:]})
        return panel_io.write_frame(frame, Path(out_dir) / "summary_stats.csv")


report_service = ReportService()


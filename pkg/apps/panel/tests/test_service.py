import copy
from pathlib import Path

import pandas as pd
import pytest

from apps.core.exceptions import ConfigError, PanelBuildError, TooFewObservations
from apps.panel.io import load_cpi, load_json_config, load_sources, panel_as_sources, panel_csv
from apps.panel.models import CpiTable, Provenance, RawSourceTable, Unit
from apps.panel.service import panel_build_service

TOY = Path(__file__).parent / "fixtures" / "toy"


@pytest.fixture
def toy_sources():
    return load_sources([TOY / "sources.csv"])


@pytest.fixture
def toy_cpi():
    return load_cpi(TOY / "cpi.csv", base_year=1995)


@pytest.fixture
def toy_config():
    return load_json_config(TOY / "config.json")


def real_source(source_id, cells, unit=Unit.USD_1995_PER_TEU):
    return RawSourceTable(source_id, unit, cells)


def series_config(key, *sources, **extra):
    return {"key": key, "measure": "price", "splice": [{"source": s} for s in sources], **extra}


class TestBuildPanel:
    def test_toy_fixture_matches_golden_file(self, toy_sources, toy_cpi, toy_config):
        result = panel_build_service.build_panel(toy_sources, toy_cpi, toy_config)
        expected = (TOY / "expected_panel.csv").read_text(encoding="utf-8")
        assert panel_csv(result.rows) == expected

    def test_toy_fixture_log(self, toy_sources, toy_cpi, toy_config):
        result = panel_build_service.build_panel(toy_sources, toy_cpi, toy_config)
        (splice,) = [entry for entry in result.log.entries() if entry["step"] == "splice"]
        assert splice["detail"]["factor"] == pytest.approx(200.0 / 190.0)
        assert splice["detail"]["overlap"] == [[2002, 2002]]
        steps = result.log.steps("toy_route")
        assert steps[0] == "splice"
        assert {"convert", "calibrated", "interpolated", "deflate"} <= set(steps)

    def test_spliced_series_matches_anchor(self, toy_sources, toy_cpi, toy_config):
        config = copy.deepcopy(toy_config)
        config["series"][0]["deflate"] = False
        frame = panel_build_service.build_panel(toy_sources, toy_cpi, config).frame()
        assert frame.set_index("year").loc[2002, "value"] == 200.0
        assert set(frame["unit"]) == {Unit.USD_PER_TEU}

    def test_rebuild_is_idempotent(self, toy_sources, toy_cpi, toy_config):
        first = panel_build_service.build_panel(toy_sources, toy_cpi, toy_config)
        sources = panel_as_sources(first.frame())
        config = {"series": [series_config("toy_route", "panel_usd_1995_per_teu")]}
        second = panel_build_service.build_panel(sources, toy_cpi, config)
        assert second.rows == first.rows
        assert panel_csv(second.rows) == panel_csv(first.rows)

    def test_deterministic(self, toy_sources, toy_cpi, toy_config):
        runs = [
            panel_csv(panel_build_service.build_panel(toy_sources, toy_cpi, toy_config).rows)
            for _ in range(3)
        ]
        assert len(set(runs)) == 1

    def test_observed_count_independent_of_fill_config(self, toy_sources, toy_cpi, toy_config):
        config = copy.deepcopy(toy_config)
        config["series"][0]["interpolate"] = False
        counts = []
        for item in (toy_config, config):
            frame = panel_build_service.build_panel(toy_sources, toy_cpi, item).frame()
            assert frame["provenance"].notna().all()
            counts.append(int((frame["provenance"] == Provenance.OBSERVED).sum()))
        assert counts == [3, 3]

    def test_empty_sources(self, toy_cpi, toy_config):
        result = panel_build_service.build_panel([], toy_cpi, {})
        assert result.rows == () and len(result.log) == 0
        result = panel_build_service.build_panel([], toy_cpi, toy_config)
        assert result.rows == () and len(result.log) == 0

    def test_missing_splice_source_is_skipped(self, toy_sources, toy_cpi, toy_config):
        recent = [table for table in toy_sources if table.source_id == "recent"]
        frame = panel_build_service.build_panel(recent, toy_cpi, toy_config).frame()
        assert frame["year"].tolist() == [2002, 2003, 2004]

    def test_window(self, toy_sources, toy_cpi, toy_config):
        config = copy.deepcopy(toy_config)
        config["series"][0]["window"] = [2001, 2003]
        frame = panel_build_service.build_panel(toy_sources, toy_cpi, config).frame()
        assert frame["year"].tolist() == [2001, 2002, 2003]

    def test_directional_allocation(self):
        sources = [
            real_source("routes", {("east", 1990): 30.0, ("west", 1990): 10.0}),
            real_source("totals", {("both", 1989): 100.0, ("both", 1990): 40.0}),
        ]
        config = {
            "series": [series_config("east", "routes"), series_config("west", "routes")],
            "allocations": [
                {"source": "totals", "total_key": "both", "eastbound": "east", "westbound": "west"}
            ],
        }
        result = panel_build_service.build_panel(sources, None, config)
        cells = {(row.key, row.year): (row.value, row.provenance) for row in result.rows}
        assert cells[("east", 1989)] == (75.0, Provenance.ALLOCATED)
        assert cells[("west", 1989)] == (25.0, Provenance.ALLOCATED)
        assert cells[("east", 1990)] == (30.0, Provenance.OBSERVED)
        allocated = [entry for entry in result.log.entries() if entry["step"] == "allocated"]
        assert [entry["detail"]["reference_year"] for entry in allocated] == [1990, 1990]

    def test_allocation_picks_series_of_matching_measure(self):
        sources = [
            real_source("rates", {("east", 1990): 30.0, ("west", 1990): 10.0}),
            RawSourceTable("volumes", Unit.MILLION_TEU, {("east", 1990): 3.0, ("west", 1990): 1.0}),
            RawSourceTable("totals", Unit.THOUSAND_TEU, {("both", 1989): 2000.0}),
        ]
        config = {
            "series": [
                series_config("east", "rates"),
                {"key": "east", "measure": "quantity", "splice": [{"source": "volumes"}]},
                series_config("west", "rates"),
                {"key": "west", "measure": "quantity", "splice": [{"source": "volumes"}]},
            ],
            "allocations": [
                {"source": "totals", "total_key": "both", "eastbound": "east", "westbound": "west"}
            ],
        }
        result = panel_build_service.build_panel(sources, None, config)
        cells = {(row.key, row.year, row.unit): row.value for row in result.rows}
        assert cells[("east", 1989, Unit.MILLION_TEU)] == pytest.approx(1.5)
        assert cells[("west", 1989, Unit.MILLION_TEU)] == pytest.approx(0.5)
        assert ("east", 1989, Unit.USD_1995_PER_TEU) not in cells

    def test_allocation_measure_must_match_total_unit(self):
        sources = [
            real_source("rates", {("east", 1990): 30.0, ("west", 1990): 10.0}),
            RawSourceTable("totals", Unit.THOUSAND_TEU, {("both", 1989): 2000.0}),
        ]
        config = {
            "series": [series_config("east", "rates"), series_config("west", "rates")],
            "allocations": [
                {
                    "source": "totals",
                    "total_key": "both",
                    "eastbound": "east",
                    "westbound": "west",
                    "measure": "price",
                }
            ],
        }
        with pytest.raises(PanelBuildError) as excinfo:
            panel_build_service.build_panel(sources, None, config)
        assert [failure.code for failure in excinfo.value.failures] == ["config_error"]

    def test_ratio_imputation(self):
        sources = [
            real_source("container", {("asia_europe", 1990): 50.0}),
            real_source(
                "liner",
                {
                    ("asia_europe", 1988): 80.0,
                    ("asia_europe", 1989): 90.0,
                    ("asia_europe", 1990): 100.0,
                },
                unit=Unit.INDEX_1995_100,
            ),
        ]
        config = {
            "series": [
                series_config(
                    "asia_europe",
                    "container",
                    impute={"reference_source": "liner", "anchor_years": [1990]},
                )
            ]
        }
        result = panel_build_service.build_panel(sources, None, config)
        assert [(row.year, row.value, row.provenance) for row in result.rows] == [
            (1988, 40.0, Provenance.RATIO_IMPUTED),
            (1989, 45.0, Provenance.RATIO_IMPUTED),
            (1990, 50.0, Provenance.OBSERVED),
        ]
        assert "impute_ratio" in result.log.steps("asia_europe")

    def test_secondhand_chain_is_logged(self):
        vessels = {("secondhand", 1981): 16.0}
        sources = [RawSourceTable("vessels", Unit.USD_PER_DWT_VESSEL, vessels)]
        config = {
            "series": [
                series_config("secondhand", "vessels", vessel_type="secondhand", deflate=False)
            ]
        }
        result = panel_build_service.build_panel(sources, None, config)
        (row,) = result.rows
        assert row.value == pytest.approx(4.6171875 / 1200)
        assert row.unit == Unit.USD_PER_TEU
        entries = result.log.entries()
        assert entries[0]["step"] == "negative_depreciation"
        (convert,) = [entry for entry in entries if entry["step"] == "convert"]
        assert convert["detail"]["per_12000dwt"] == pytest.approx(46.171875)

    def test_secondhand_failure_names_source_cell(self):
        vessels = {("secondhand", 1981): 16.0, ("secondhand", 1982): 2.7}
        sources = [RawSourceTable("vessels", Unit.USD_PER_DWT_VESSEL, vessels)]
        config = {
            "series": [
                series_config("secondhand", "vessels", vessel_type="secondhand", deflate=False)
            ]
        }
        with pytest.raises(PanelBuildError) as excinfo:
            panel_build_service.build_panel(sources, None, config)
        (failure,) = excinfo.value.failures
        assert (failure.source, failure.year, failure.code) == (
            "vessels",
            1982,
            "non_positive_input",
        )
        assert "Age-adjusted" in failure.message
        assert [row.year for row in excinfo.value.rows] == [1981]

    def test_capacity_quantities(self):
        fleet = {("transpacific_eastbound", 1970): 2e5}
        sources = [RawSourceTable("fleet", Unit.TEU_CAPACITY, fleet)]
        config = {
            "series": [
                {
                    "key": "transpacific_eastbound",
                    "measure": "quantity",
                    "splice": [{"source": "fleet"}],
                }
            ]
        }
        (row,) = panel_build_service.build_panel(sources, None, config).rows
        assert (row.value, row.unit, row.provenance) == (0.2, Unit.MILLION_TEU, "capacity_derived")

    def test_failures_are_aggregated(self, toy_sources, toy_config):
        cpi = CpiTable({1995: 100.0, 2000: 125.0, 2001: 125.0, 2002: 125.0, 2003: 125.0})
        config = copy.deepcopy(toy_config)
        config["series"].append(
            {"key": "toy_route", "measure": "quantity", "splice": [{"source": "recent"}]}
        )
        with pytest.raises(PanelBuildError) as excinfo:
            panel_build_service.build_panel(toy_sources, cpi, config)
        failures = excinfo.value.failures
        assert [(f.key, f.year, f.source, f.code) for f in failures] == [
            ("toy_route", None, "recent", "config_error"),
            ("toy_route", 2004, "cpi", "missing_cpi_year"),
        ]
        assert [row.year for row in excinfo.value.rows] == [2000, 2001, 2002, 2003]
        assert excinfo.value.to_payload()["details"]["failures"][1]["year"] == 2004

    def test_deflation_needs_cpi(self, toy_sources, toy_config):
        with pytest.raises(PanelBuildError) as excinfo:
            panel_build_service.build_panel(toy_sources, None, toy_config)
        assert excinfo.value.failures[0].source == "cpi"

    def test_duplicate_series_rejected(self):
        config = {"series": [series_config("a", "s"), series_config("a", "t")]}
        with pytest.raises(ConfigError):
            panel_build_service.build_panel([], None, config)

    def test_duplicate_source_rejected(self):
        table = real_source("s", {("a", 2000): 1.0})
        with pytest.raises(ConfigError):
            panel_build_service.build_panel([table, table], None, {})


class TestSummaryStats:
    def frame(self, rows):
        return pd.DataFrame(rows, columns=["key", "year", "value", "unit"])

    def test_hand_computed(self):
        panel = self.frame([("a", year, float(year), "million_teu") for year in (1, 2, 3)])
        stats = panel_build_service.summary_stats(panel)
        assert (stats.n, stats.mean, stats.sd, stats.min, stats.max) == (3, 2.0, 1.0, 1.0, 3.0)

    def test_constant(self):
        panel = self.frame([("a", year, 5.0, "million_teu") for year in range(4)])
        assert panel_build_service.summary_stats(panel).sd == 0.0

    def test_too_few(self):
        with pytest.raises(TooFewObservations):
            panel_build_service.summary_stats(self.frame([("a", 1, 1.0, "million_teu")]))

    def test_table_groups(self):
        rows = []
        for key in ("transatlantic_westbound", "transpacific_eastbound"):
            rows += [(key, 2000, 100.0, "usd_1995_per_teu"), (key, 2001, 300.0, "usd_1995_per_teu")]
            rows += [(key, 2000, 1.0, "million_teu"), (key, 2001, 2.0, "million_teu")]
        rows += [("scrap", year, 10.0 * (year - 1999), "usd_1995_per_teu") for year in (2000, 2001)]
        table = panel_build_service.summary_table(self.frame(rows))
        summary = {(row.panel, row.variable): row.stats for row in table}
        assert list(summary) == [("a", "price"), ("a", "quantity"), ("b", "scrap")]
        assert summary[("a", "price")].n == 4
        assert summary[("a", "price")].mean == 200.0
        assert summary[("a", "quantity")].max == 2.0

    def test_selected_generic_key(self):
        panel = self.frame([("toy", year, float(year), "usd_1995_per_teu") for year in (1, 2, 3)])
        (row,) = panel_build_service.summary_table(panel, keys=["toy"])
        assert (row.panel, row.variable, row.stats.n, row.stats.sd) == ("b", "toy", 3, 1.0)

    def test_empty_selection(self):
        panel = self.frame([("scrap", 2000, 10.0, "usd_1995_per_teu")])
        assert panel_build_service.summary_table(panel, keys=[]) == []

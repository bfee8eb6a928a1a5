import math
import time

import numpy as np
import pytest

from apps.core.exceptions import DegenerateFit, InvalidParameter
from apps.segmentation.types import TimeSeries
from apps.selection.service import bic, parameter_count, select_breaks


def three_regimes(rng, sigma=0.1):
    values = np.repeat([0.0, 5.0, 10.0], 20) + rng.normal(scale=sigma, size=60)
    return TimeSeries.from_values(values, series_id="three-regimes", start=1949)


class TestBic:
    def test_parameter_count(self):
        assert parameter_count(0, 1) == 2
        assert parameter_count(2, 1) == 5
        assert parameter_count(3, 2) == 12

    def test_closed_form(self):
        expected = 10 * (math.log(2 * math.pi) + 1) + 2 * math.log(10)
        assert bic(10.0, 10, 0, 1) == pytest.approx(expected, rel=1e-12)
        assert bic(10.0, 10, 0, 1) == pytest.approx(32.98394, abs=1e-4)

    @pytest.mark.parametrize("m", [0, 1, 2, 3])
    def test_scaling_adds_constant(self, m):
        scale = 3.5
        shifted = bic(scale**2 * 7.0, 40, m, 1) - bic(7.0, 40, m, 1)
        assert shifted == pytest.approx(40 * math.log(scale**2), rel=1e-12)

    def test_perfect_fit_scores_minus_infinity(self):
        assert bic(0.0, 10, 1, 1) == -math.inf
        with pytest.raises(DegenerateFit):
            bic(0.0, 10, 1, 1, strict=True)

    def test_requires_more_observations_than_parameters(self):
        with pytest.raises(InvalidParameter):
            bic(1.0, 5, 2, 1)


class TestSelectBreaks:
    def test_recovers_two_breaks(self):
        table, result = select_breaks(three_regimes(np.random.default_rng(2008)), 4, 6)
        assert table.chosen_m == 2
        assert result.breaks.break_indices == (20, 40)
        assert len(result.segment_fits) == 3
        assert [round(float(fit.coefficients[0])) for fit in result.segment_fits] == [0, 5, 10]

    def test_constant_series_prefers_no_breaks(self):
        series = TimeSeries.from_values([3.0] * 24)
        table, result = select_breaks(series, 4, 4)
        assert table.chosen_m == 0
        assert result.m == 0
        assert all(row.degenerate for row in table.rows if row.feasible)
        assert all(row.bic == -math.inf for row in table.rows if row.feasible)

    def test_rows_cover_every_m(self):
        series = TimeSeries.from_values(np.random.default_rng(1).normal(size=12))
        table, _ = select_breaks(series, 4, 4)
        assert [row.m for row in table.rows] == [0, 1, 2, 3, 4]
        assert [row.feasible for row in table.rows] == [True, True, True, False, False]
        assert table.rows[3].total_ssr is None

    def test_too_many_parameters_is_infeasible(self):
        series = TimeSeries.from_values(np.random.default_rng(2).normal(size=8))
        table, _ = select_breaks(series, 3, 2)
        assert table.rows[3].bic is None
        assert not table.rows[3].feasible
        assert table.rows[3].total_ssr is not None
        assert table.rows[2].feasible

    def test_ssr_non_increasing(self):
        table, _ = select_breaks(three_regimes(np.random.default_rng(4), sigma=1.0), 8, 4)
        ssrs = [row.total_ssr for row in table.rows if row.feasible]
        assert all(later <= earlier for earlier, later in zip(ssrs, ssrs[1:]))

    def test_rows_stable_when_max_m_grows(self):
        series = three_regimes(np.random.default_rng(5), sigma=2.0)
        small, _ = select_breaks(series, 3, 4)
        large, _ = select_breaks(series, 6, 4)
        assert small.rows == large.rows[:4]

    def test_positive_scaling_invariance(self):
        series = three_regimes(np.random.default_rng(6), sigma=2.0)
        table, result = select_breaks(series, 5, 4)
        scaled_table, scaled = select_breaks(series.with_values(17.0 * series.values), 5, 4)
        assert scaled_table.chosen_m == table.chosen_m
        assert scaled.breaks == result.breaks

    def test_negative_max_m(self):
        with pytest.raises(InvalidParameter):
            select_breaks(TimeSeries.from_values(range(10)), -1, 2)

    @pytest.mark.slow
    def test_recovery_rate(self):
        rng = np.random.default_rng(500)
        hits = 0
        for _ in range(500):
            table, result = select_breaks(three_regimes(rng), 4, 6)
            hits += table.chosen_m == 2 and result.breaks.break_indices == (20, 40)
        assert hits >= 495


@pytest.mark.slow
class TestRuntime:
    def test_long_series(self):
        rng = np.random.default_rng(1000)
        lengths = [200] + [100] * 8
        values = np.repeat(np.arange(9.0) * 3.0, lengths) + rng.normal(scale=0.5, size=1000)
        series = TimeSeries.from_values(values)
        started = time.perf_counter()
        table, result = select_breaks(series, 8, 100)
        elapsed = time.perf_counter() - started
        assert table.chosen_m == 8
        assert result.breaks.break_indices == tuple(range(200, 1000, 100))
        assert elapsed < 1.0

    def test_route_sized_panel(self):
        rng = np.random.default_rng(41)
        panel = [
            TimeSeries.from_values(rng.normal(size=41), series_id=f"route-{i}", start=1968)
            for i in range(6)
        ]
        started = time.perf_counter()
        for series in panel:
            select_breaks(series, 8, 4)
        assert time.perf_counter() - started < 0.1

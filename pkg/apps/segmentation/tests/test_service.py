import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.core.exceptions import (
    InfeasibleBreakCount,
    InvalidBreakSet,
    InvalidParameter,
    OracleTooLarge,
    SeriesTooShort,
    SingularSegment,
)
from apps.segmentation.service import (
    BreakSearch,
    brute_force_optimal_breaks,
    compute_ssr_triangle,
    fit_segments,
    optimal_breaks,
)
from apps.segmentation.types import BreakSet, TimeSeries


def series_of(values, series_id="series"):
    return TimeSeries.from_values(values, series_id=series_id)


def breaks_for(values, m, min_len):
    series = series_of(values)
    return optimal_breaks(compute_ssr_triangle(series, min_len), m, min_len)


class TestSsrTriangle:
    def test_constant_series_has_zero_ssr(self):
        tri = compute_ssr_triangle(series_of([1, 1, 1]), 1)
        assert tri.ssr(1, 3) == 0.0

    def test_two_point_series(self):
        tri = compute_ssr_triangle(series_of([0, 2]), 1)
        assert tri.ssr(1, 2) == pytest.approx(2.0)

    def test_three_point_series(self):
        tri = compute_ssr_triangle(series_of([0, 1, 2]), 1)
        assert tri.ssr(1, 3) == pytest.approx(2.0)

    def test_cells_match_direct_mean_deviation(self):
        rng = np.random.default_rng(7)
        values = rng.normal(size=25) * 3 + 10
        tri = compute_ssr_triangle(series_of(values), 3)
        for i in range(1, 26):
            for j in range(i + 2, 26):
                segment = values[i - 1 : j]
                expected = float(((segment - segment.mean()) ** 2).sum())
                assert tri.ssr(i, j) == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_regression_cells_match_lstsq(self):
        rng = np.random.default_rng(11)
        t_len = 30
        trend = np.arange(t_len, dtype=float)
        z = np.column_stack([np.ones(t_len), trend])
        values = 2.0 + 0.5 * trend + rng.normal(size=t_len)
        series = TimeSeries("trend", np.arange(1990, 1990 + t_len), values, z)
        tri = compute_ssr_triangle(series, 4)
        for i in range(1, t_len + 1):
            for j in range(i + 3, t_len + 1):
                block, target = z[i - 1 : j], values[i - 1 : j]
                coef, *_ = np.linalg.lstsq(block, target, rcond=None)
                expected = float(((target - block @ coef) ** 2).sum())
                assert tri.ssr(i, j) == pytest.approx(expected, rel=1e-7, abs=1e-9)

    def test_short_segments_are_not_admissible(self):
        tri = compute_ssr_triangle(series_of([0, 1, 2, 3, 4, 5]), 3)
        assert not tri.is_admissible(1, 2)
        with pytest.raises(InvalidBreakSet):
            tri.ssr(1, 2)

    def test_nested_monotonicity(self):
        rng = np.random.default_rng(3)
        tri = compute_ssr_triangle(series_of(rng.normal(size=40)), 2)
        for i in range(1, 40):
            for j in range(i + 1, 40):
                assert tri.ssr(i, j) <= tri.ssr(i, j + 1)

    def test_series_too_short(self):
        with pytest.raises(SeriesTooShort):
            compute_ssr_triangle(series_of([1, 2, 3, 4, 5]), 3)

    def test_min_len_below_q_is_rejected(self):
        z = np.column_stack([np.ones(8), np.arange(8.0)])
        series = TimeSeries("x", np.arange(8), np.arange(8.0), z)
        with pytest.raises(InvalidParameter):
            compute_ssr_triangle(series, 1)

    def test_calendar_year_trend_matches_lstsq(self):
        rng = np.random.default_rng(1968)
        years = np.arange(1968, 2009)
        z = np.column_stack([np.ones(years.size), years.astype(float)])
        values = np.where(years < 1990, 100.0, 140.0) + 0.3 * (years - 1968)
        values = values + rng.normal(scale=5.0, size=years.size)
        series = TimeSeries("trend", years, values, z)
        tri = compute_ssr_triangle(series, 4)
        for i in range(1, years.size + 1):
            for j in range(i + 3, years.size + 1):
                block, target = z[i - 1 : j], values[i - 1 : j]
                coef, *_ = np.linalg.lstsq(block, target, rcond=None)
                expected = float(((target - block @ coef) ** 2).sum())
                assert tri.ssr(i, j) == pytest.approx(expected, rel=1e-9)
        window = TimeSeries("trend", years[11:], values[11:], z[11:])
        dp = optimal_breaks(compute_ssr_triangle(window, 4), 2, 4)
        oracle = brute_force_optimal_breaks(window, 2, 4)
        assert dp.breaks == oracle.breaks
        assert dp.total_ssr == pytest.approx(oracle.total_ssr, rel=1e-9)

    def test_singular_segment_reports_bounds(self):
        slope = np.array([1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        z = np.column_stack([np.ones(8), slope])
        series = TimeSeries("flat-start", np.arange(8), np.arange(8.0), z)
        with pytest.raises(SingularSegment) as excinfo:
            compute_ssr_triangle(series, 2)
        assert excinfo.value.details == {"start": 1, "end": 2}


class TestOptimalBreaks:
    def test_constant_series_takes_smallest_break(self):
        result = breaks_for([5] * 8, 1, 2)
        assert result.breaks.break_indices == (2,)
        assert result.total_ssr == 0.0

    def test_single_step(self):
        result = breaks_for([0, 0, 0, 10, 10, 10], 1, 2)
        assert result.breaks.break_indices == (3,)
        assert result.total_ssr == pytest.approx(0.0, abs=1e-12)

    def test_two_noisy_halves(self):
        result = breaks_for([0, 1, 0, 1, 8, 9, 8, 9], 1, 2)
        assert result.breaks.break_indices == (4,)
        assert result.total_ssr == pytest.approx(2.0)

    def test_two_breaks(self):
        result = breaks_for([0, 0, 10, 10, 0, 0], 2, 2)
        assert result.breaks.break_indices == (2, 4)
        assert result.total_ssr == pytest.approx(0.0, abs=1e-12)

    def test_zero_breaks_is_full_sample(self):
        result = breaks_for([0, 1, 2], 0, 1)
        assert result.breaks.break_indices == ()
        assert result.total_ssr == pytest.approx(2.0)

    def test_infeasible_break_count(self):
        tri = compute_ssr_triangle(series_of(range(8)), 2)
        with pytest.raises(InfeasibleBreakCount):
            optimal_breaks(tri, 4, 2)

    def test_search_answers_every_feasible_m(self):
        rng = np.random.default_rng(5)
        values = np.repeat([0.0, 4.0, -2.0, 6.0], 10) + rng.normal(scale=0.2, size=40)
        tri = compute_ssr_triangle(series_of(values), 4)
        search = BreakSearch(tri, 4, 9)
        assert search.max_m == 9
        for m in range(10):
            assert search.best(m).breaks == optimal_breaks(tri, m, 4).breaks
        assert search.best(3).breaks.break_indices == (10, 20, 30)
        assert not search.is_feasible(10)

    def test_larger_min_len_than_triangle(self):
        values = [0, 0, 0, 0, 9, 0, 0, 0, 0, 0]
        tri = compute_ssr_triangle(series_of(values), 1)
        result = optimal_breaks(tri, 1, 5)
        assert result.breaks.break_indices == (5,)
        assert result.breaks.is_admissible(10, 5)


class TestBruteForceOracle:
    @pytest.mark.parametrize(
        "values,m,min_len,expected",
        [
            ([5] * 8, 1, 2, (2,)),
            ([0, 0, 0, 10, 10, 10], 1, 2, (3,)),
            ([0, 1, 0, 1, 8, 9, 8, 9], 1, 2, (4,)),
            ([0, 0, 10, 10, 0, 0], 2, 2, (2, 4)),
        ],
    )
    def test_matches_worked_examples(self, values, m, min_len, expected):
        oracle = brute_force_optimal_breaks(series_of(values), m, min_len)
        dp = breaks_for(values, m, min_len)
        assert oracle.breaks.break_indices == expected
        assert dp.breaks == oracle.breaks
        assert dp.total_ssr == pytest.approx(oracle.total_ssr, abs=1e-12)

    def test_random_instances_agree_with_dynamic_program(self):
        rng = np.random.default_rng(20240501)
        for _ in range(200):
            m = int(rng.integers(1, 4))
            min_len = int(rng.integers(2, 4))
            t_len = int(rng.integers(max(8, (m + 1) * min_len), 21))
            series = series_of(rng.normal(size=t_len))
            oracle = brute_force_optimal_breaks(series, m, min_len)
            dp = optimal_breaks(compute_ssr_triangle(series, min_len), m, min_len)
            assert dp.breaks == oracle.breaks
            assert dp.total_ssr == pytest.approx(oracle.total_ssr, rel=1e-9, abs=1e-12)

    def test_guards(self):
        with pytest.raises(OracleTooLarge):
            brute_force_optimal_breaks(series_of(range(31)), 1, 2)
        with pytest.raises(OracleTooLarge):
            brute_force_optimal_breaks(series_of(range(20)), 5, 2)
        with pytest.raises(InfeasibleBreakCount):
            brute_force_optimal_breaks(series_of(range(8)), 3, 3)


class TestFitSegments:
    def test_exact_means(self):
        result = fit_segments(series_of([2, 2, 4, 4]), BreakSet((2,)))
        assert [float(fit.coefficients[0]) for fit in result.segment_fits] == [2.0, 4.0]
        assert result.total_ssr == 0.0

    def test_no_breaks(self):
        result = fit_segments(series_of([1, 3]), BreakSet())
        assert result.m == 0
        assert float(result.segment_fits[0].coefficients[0]) == 2.0
        assert result.total_ssr == pytest.approx(2.0)

    def test_two_regimes(self):
        values = [0, 1, 0, 1, 8, 9, 8, 9]
        result = fit_segments(series_of(values), BreakSet((4,)))
        assert [float(fit.coefficients[0]) for fit in result.segment_fits] == [0.5, 8.5]
        assert result.total_ssr == pytest.approx(2.0)
        np.testing.assert_allclose(
            result.fitted_values(series_of(values)), [0.5] * 4 + [8.5] * 4
        )

    def test_inadmissible_breaks(self):
        with pytest.raises(InvalidBreakSet):
            fit_segments(series_of([1, 2, 3, 4]), BreakSet((1,)), min_len=2)

    def test_unsorted_breaks(self):
        with pytest.raises(InvalidBreakSet):
            BreakSet((4, 2))


class TestProperties:
    def test_ssr_monotone_in_m_and_affine_equivariant(self):
        rng = np.random.default_rng(12345)
        for _ in range(500):
            t_len = int(rng.integers(12, 61))
            min_len = int(rng.integers(2, 5))
            values = rng.normal(size=t_len) + np.repeat(rng.normal(scale=2, size=6), 12)[:t_len]
            scale = float(rng.choice([-1, 1]) * rng.uniform(0.1, 10))
            shift = float(rng.uniform(-100, 100))

            search = BreakSearch(compute_ssr_triangle(series_of(values), min_len), min_len, 4)
            moved = BreakSearch(
                compute_ssr_triangle(series_of(scale * values + shift), min_len), min_len, 4
            )
            previous = np.inf
            for m in range(search.max_m + 1):
                result = search.best(m)
                result.breaks.validate(t_len, min_len)
                assert result.total_ssr <= previous * (1 + 1e-12)
                previous = result.total_ssr
                assert moved.best(m).breaks == result.breaks

    def test_time_reversal(self):
        rng = np.random.default_rng(99)
        for _ in range(50):
            values = np.repeat([0.0, 6.0, 2.0], [9, 7, 11]) + rng.normal(scale=0.5, size=27)
            forward = breaks_for(values, 2, 3)
            backward = breaks_for(values[::-1], 2, 3)
            mirrored = tuple(sorted(27 - index for index in forward.breaks.break_indices))
            assert backward.breaks.break_indices == mirrored
            assert backward.total_ssr == pytest.approx(forward.total_ssr, rel=1e-9)

    @given(
        values=st.lists(st.integers(-10, 10), min_size=8, max_size=16),
        scale=st.integers(-5, 5).filter(lambda value: value != 0),
        shift=st.integers(-50, 50),
        m=st.integers(0, 2),
    )
    @settings(max_examples=200, deadline=None)
    def test_affine_equivariance_with_exact_ties(self, values, scale, shift, m):
        values = np.asarray(values, dtype=float)
        original = breaks_for(values, m, 2)
        moved = breaks_for(scale * values + shift, m, 2)
        assert moved.breaks == original.breaks
        assert moved.total_ssr == pytest.approx(scale**2 * original.total_ssr, rel=1e-9, abs=1e-9)

    @given(values=st.lists(st.integers(-10, 10), min_size=6, max_size=14), m=st.integers(1, 2))
    @settings(max_examples=200, deadline=None)
    def test_oracle_agreement_on_integer_data(self, values, m):
        series = series_of(values)
        oracle = brute_force_optimal_breaks(series, m, 2)
        dp = optimal_breaks(compute_ssr_triangle(series, 2), m, 2)
        assert dp.breaks == oracle.breaks

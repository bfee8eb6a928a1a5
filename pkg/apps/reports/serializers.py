"""
Report serializers
"""

import math

from django.conf import settings
from rest_framework import serializers

from apps.core.serializers import YearRangeField
from apps.inference.service import IntervalStatus
from apps.reports.models import (
    AnalysisConfig,
    BicRow,
    BreakReport,
    BreakRow,
    PlotPoint,
    SegmentRow,
)


class BandwidthField(serializers.Field):
    """
    Kernel bandwidth: a non-negative integer lag or "auto".
    """

    def to_internal_value(self, data):
        if data == "auto":
            return data
        if isinstance(data, bool):
            raise serializers.ValidationError('Bandwidth must be a non-negative integer or "auto".')
        try:
            lags = int(data)
        except (TypeError, ValueError):
            raise serializers.ValidationError('Bandwidth must be a non-negative integer or "auto".')
        if lags < 0 or str(lags) != str(data).strip():
            raise serializers.ValidationError('Bandwidth must be a non-negative integer or "auto".')
        return lags

    def to_representation(self, value):
        return value


class ScoreField(serializers.Field):
    """
    Float that may be infinite; infinities travel as the strings "inf" and "-inf".
    """

    def to_internal_value(self, data):
        if data in ("inf", "-inf"):
            return float(data)
        if isinstance(data, bool) or not isinstance(data, (int, float)):
            raise serializers.ValidationError("A number, 'inf' or '-inf' is required.")
        if math.isnan(data):
            raise serializers.ValidationError("NaN is not a valid score.")
        return float(data)

    def to_representation(self, value):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value


class AnalysisConfigSerializer(serializers.Serializer):
    """
    Serializer for the ``breaks`` analysis options.
    """

    inputs = serializers.ListField(child=serializers.CharField(), min_length=1)
    series = serializers.ListField(child=serializers.CharField(), default=list)
    min_len = serializers.IntegerField(min_value=1, required=False)
    max_m = serializers.IntegerField(min_value=0, required=False)
    level = serializers.FloatField(required=False)
    bandwidth = BandwidthField(required=False)
    het_regressors = serializers.BooleanField(default=True)
    het_errors = serializers.BooleanField(default=True)
    window = YearRangeField(required=False, allow_null=True)
    windows = serializers.DictField(child=YearRangeField(), default=dict)
    out_dir = serializers.CharField(required=False, allow_null=True)

    def validate_level(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("Confidence level must lie in (0, 1).")
        return value

    def validate(self, attrs):
        """
        Fill unset analysis options from settings.
        """
        attrs.setdefault("min_len", settings.BREAKS_MIN_LEN)
        attrs.setdefault("max_m", settings.BREAKS_MAX_M)
        attrs.setdefault("level", settings.BREAKS_LEVEL)
        attrs.setdefault("bandwidth", settings.BREAKS_BANDWIDTH)
        return attrs

    def create(self, validated_data):
        return AnalysisConfig(
            inputs=tuple(validated_data["inputs"]),
            series=tuple(validated_data["series"]),
            min_len=validated_data["min_len"],
            max_m=validated_data["max_m"],
            level=validated_data["level"],
            bandwidth=validated_data["bandwidth"],
            het_regressors=validated_data["het_regressors"],
            het_errors=validated_data["het_errors"],
            window=validated_data.get("window"),
            windows=dict(validated_data["windows"]),
            out_dir=validated_data.get("out_dir"),
        )


class BicRowSerializer(serializers.Serializer):
    m = serializers.IntegerField(min_value=0)
    total_ssr = serializers.FloatField(allow_null=True)
    bic = ScoreField(allow_null=True)
    feasible = serializers.BooleanField()
    degenerate = serializers.BooleanField()
    break_years = serializers.ListField(child=serializers.IntegerField(), allow_null=True)


class BreakRowSerializer(serializers.Serializer):
    break_index = serializers.IntegerField(min_value=1)
    year = serializers.IntegerField()
    lower_year = serializers.IntegerField(allow_null=True)
    upper_year = serializers.IntegerField(allow_null=True)
    level = serializers.FloatField()
    status = serializers.ChoiceField(choices=IntervalStatus.choices)


class SegmentRowSerializer(serializers.Serializer):
    start_year = serializers.IntegerField()
    end_year = serializers.IntegerField()
    n_obs = serializers.IntegerField(min_value=1)
    coefficients = serializers.ListField(child=serializers.FloatField())
    standard_errors = serializers.ListField(child=serializers.FloatField())
    ssr = serializers.FloatField()


class PlotPointSerializer(serializers.Serializer):
    year = serializers.IntegerField()
    observed = serializers.FloatField()
    fitted = serializers.FloatField()


class BreakReportSerializer(serializers.Serializer):
    """
    Serializer for the per-series break report JSON (schema in docs/break_report.md).
    """

    series_id = serializers.CharField()
    key = serializers.CharField()
    unit = serializers.CharField(allow_null=True)
    t_len = serializers.IntegerField(min_value=1)
    q = serializers.IntegerField(min_value=1)
    min_len = serializers.IntegerField(min_value=1)
    max_m = serializers.IntegerField(min_value=0)
    level = serializers.FloatField()
    window = YearRangeField(allow_null=True)
    chosen_m = serializers.IntegerField(min_value=0)
    break_indices = serializers.ListField(child=serializers.IntegerField())
    break_years = serializers.ListField(child=serializers.IntegerField())
    bic_table = BicRowSerializer(many=True)
    intervals = BreakRowSerializer(many=True)
    segments = SegmentRowSerializer(many=True)
    plot = PlotPointSerializer(many=True)

    def validate(self, attrs):
        if len(attrs["break_indices"]) != attrs["chosen_m"]:
            raise serializers.ValidationError("break_indices must hold chosen_m entries.")
        if len(attrs["segments"]) != attrs["chosen_m"] + 1:
            raise serializers.ValidationError("segments must hold chosen_m + 1 regimes.")
        return attrs

    def create(self, validated_data):
        """
        Rebuild the in-memory report from validated JSON.
        """

        def years(values):
            return None if values is None else tuple(values)

        return BreakReport(
            series_id=validated_data["series_id"],
            key=validated_data["key"],
            unit=validated_data["unit"],
            t_len=validated_data["t_len"],
            q=validated_data["q"],
            min_len=validated_data["min_len"],
            max_m=validated_data["max_m"],
            level=validated_data["level"],
            window=validated_data["window"],
            chosen_m=validated_data["chosen_m"],
            break_indices=tuple(validated_data["break_indices"]),
            break_years=tuple(validated_data["break_years"]),
            bic_table=tuple(
                BicRow(**{**row, "break_years": years(row["break_years"])})
                for row in validated_data["bic_table"]
            ),
            intervals=tuple(BreakRow(**row) for row in validated_data["intervals"]),
            segments=tuple(
                SegmentRow(
                    **{
                        **row,
                        "coefficients": tuple(row["coefficients"]),
                        "standard_errors": tuple(row["standard_errors"]),
                    }
                )
                for row in validated_data["segments"]
            ),
            plot=tuple(PlotPoint(**row) for row in validated_data["plot"]),
        )

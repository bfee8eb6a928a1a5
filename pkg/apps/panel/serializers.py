"""
Panel build configuration serializers
"""

from django.conf import settings
from rest_framework import serializers

from apps.core.serializers import PositiveFloatField, YearRangeField
from apps.panel.conversions import (
    AGE_GAP_YEARS,
    DWT_PER_TEU,
    LTD_DIVISOR,
    TEU_PER_FEU,
    average_route_miles,
)
from apps.panel.models import Measure, VesselType


class RouteMilesField(serializers.Field):
    """
    Route distance given as one number or a list of port-pair distances to average.
    """

    def to_internal_value(self, data):
        distances = data if isinstance(data, list) else [data]
        try:
            distances = [float(value) for value in distances]
        except (TypeError, ValueError):
            raise serializers.ValidationError("Route miles must be numbers.")
        if not distances or any(value <= 0 for value in distances):
            raise serializers.ValidationError("Route miles must be positive.")
        return average_route_miles(*distances)

    def to_representation(self, value):
        return value


class OverlapYearField(serializers.Field):
    """
    Overlap year: a year both sources cover, or a [year_in_series, year_in_source] pair.
    """

    def to_internal_value(self, data):
        if isinstance(data, (list, tuple)):
            if len(data) != 2 or not all(isinstance(year, int) for year in data):
                raise serializers.ValidationError("Adjacent overlaps are [year, year] pairs.")
            return (data[0], data[1])
        if not isinstance(data, int) or isinstance(data, bool):
            raise serializers.ValidationError("Overlap years must be integers.")
        return data

    def to_representation(self, value):
        return list(value) if isinstance(value, tuple) else value


class SpliceEntrySerializer(serializers.Serializer):
    """
    One source in a series' splice order.
    """

    source = serializers.CharField()
    key = serializers.CharField(required=False)
    overlap_years = serializers.ListField(child=OverlapYearField(), required=False, min_length=1)
    factor = PositiveFloatField(required=False)


class ImputeSerializer(serializers.Serializer):
    """
    Fixed-ratio imputation against a reference source.
    """

    reference_source = serializers.CharField()
    reference_key = serializers.CharField(required=False)
    anchor_years = serializers.ListField(child=serializers.IntegerField(), min_length=1)
    years = YearRangeField(required=False)


class SeriesConfigSerializer(serializers.Serializer):
    """
    Build recipe for one panel series.
    """

    key = serializers.CharField()
    measure = serializers.ChoiceField(choices=Measure.choices)
    vessel_type = serializers.ChoiceField(choices=VesselType.choices, required=False)
    splice = SpliceEntrySerializer(many=True, allow_empty=False)
    impute = ImputeSerializer(required=False)
    interpolate = serializers.BooleanField(default=False)
    deflate = serializers.BooleanField(required=False)
    window = YearRangeField(required=False)

    def validate(self, attrs):
        """
        Default deflation to prices only.
        """
        attrs.setdefault("deflate", attrs["measure"] == Measure.PRICE)
        return attrs


class AllocationSerializer(serializers.Serializer):
    """
    Two-way total split into eastbound and westbound series.
    """

    source = serializers.CharField()
    total_key = serializers.CharField()
    eastbound = serializers.CharField()
    westbound = serializers.CharField()
    measure = serializers.ChoiceField(choices=Measure.choices, required=False)


class VesselSerializer(serializers.Serializer):
    bulk_to_container_factor = PositiveFloatField(default=1.0)
    liner_to_container_factor = PositiveFloatField(default=1.0)
    age_gap_years = serializers.FloatField(default=AGE_GAP_YEARS, min_value=0)
    ltd_divisor = PositiveFloatField(default=LTD_DIVISOR)
    dwt_per_teu = PositiveFloatField(default=DWT_PER_TEU)


class PanelBuildConfigSerializer(serializers.Serializer):
    """
    Serializer for the panel build configuration file.
    """

    cpi_base_year = serializers.IntegerField(required=False)
    tons_per_teu = PositiveFloatField(required=False)
    teu_per_feu = PositiveFloatField(default=TEU_PER_FEU)
    utilization = serializers.FloatField(default=1.0)
    quantity_tons_per_teu = PositiveFloatField(required=False)
    route_miles = serializers.DictField(child=RouteMilesField(), default=dict)
    vessel = VesselSerializer(required=False)
    series = SeriesConfigSerializer(many=True, required=False)
    allocations = AllocationSerializer(many=True, required=False)

    def validate_utilization(self, value):
        if not 0.0 < value <= 1.0:
            raise serializers.ValidationError("Utilization must lie in (0, 1].")
        return value

    def validate(self, attrs):
        """
        Fill defaults and reject duplicate series.
        """
        attrs.setdefault("cpi_base_year", settings.CPI_BASE_YEAR)
        vessel = VesselSerializer(data=attrs.get("vessel") or {})
        vessel.is_valid(raise_exception=True)
        attrs["vessel"] = dict(vessel.validated_data)
        attrs.setdefault("series", [])
        attrs.setdefault("allocations", [])

        seen = set()
        for item in attrs["series"]:
            identity = (item["key"], item["measure"])
            if identity in seen:
                raise serializers.ValidationError(
                    {"series": f"Series {item['key']!r} ({item['measure']}) is defined twice."}
                )
            seen.add(identity)
            if item.get("vessel_type") and item["measure"] != Measure.PRICE:
                raise serializers.ValidationError(
                    {"series": f"Series {item['key']!r}: vessel_type applies to prices only."}
                )
        return attrs

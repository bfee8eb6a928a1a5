"""
Core serializer helpers
"""

from typing import Any, Dict, Optional, Type

from rest_framework import serializers

from apps.core.exceptions import ConfigError


class PositiveFloatField(serializers.FloatField):
    """
    Float field rejecting zero and negative values.
    """

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not value > 0:
            raise serializers.ValidationError("Ensure this value is greater than 0.")
        return value


class YearRangeField(serializers.ListField):
    """
    Inclusive [start, end] pair of years.
    """

    def __init__(self, **kwargs):
        kwargs.setdefault("child", serializers.IntegerField())
        kwargs.setdefault("min_length", 2)
        kwargs.setdefault("max_length", 2)
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        start, end = super().to_internal_value(data)
        if start > end:
            raise serializers.ValidationError("Range start must not exceed its end.")
        return (start, end)


def validated_data(
    serializer_class: Type[serializers.Serializer],
    data: Dict[str, Any],
    source: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Validate ``data`` with ``serializer_class`` and return its validated data.

    Raises:
        ConfigError: with the serializer's error dict as details.
    """
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        details = {"errors": serializer.errors}
        if source:
            details["path"] = source
        raise ConfigError(f"Invalid configuration{f' in {source}' if source else ''}", details)
    return serializer.validated_data

"""
Error hierarchy shared by the analysis and panel apps.
"""

from typing import Any, Dict, Optional


class LinerBreaksError(Exception):
    """
    Base error with a stable code, structured details and a process exit code.
    """

    code = "error"
    exit_code = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_payload(self) -> Dict[str, Any]:
        """
        Standardized error report with code, message and optional details.
        """
        payload: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


# Segmentation


class InvalidSeries(LinerBreaksError):
    code = "invalid_series"


class InvalidParameter(LinerBreaksError):
    code = "invalid_parameter"


class InvalidBreakSet(LinerBreaksError):
    code = "invalid_break_set"


class SeriesTooShort(LinerBreaksError):
    code = "series_too_short"


class SingularSegment(LinerBreaksError):
    code = "singular_segment"


class InfeasibleBreakCount(LinerBreaksError):
    code = "infeasible_break_count"


class OracleTooLarge(LinerBreaksError):
    code = "oracle_too_large"


class NegativeSsr(LinerBreaksError):
    code = "negative_ssr"


# Selection and inference


class DegenerateFit(LinerBreaksError):
    code = "degenerate_fit"


class SegmentTooShort(LinerBreaksError):
    code = "segment_too_short"


class ZeroShift(LinerBreaksError):
    code = "zero_shift"


class NotEnoughBreaks(LinerBreaksError):
    code = "not_enough_breaks"


# Panel construction


class MissingCpiYear(LinerBreaksError):
    code = "missing_cpi_year"


class NoOverlap(LinerBreaksError):
    code = "no_overlap"


class ZeroDenominator(LinerBreaksError):
    code = "zero_denominator"


class NoAnchor(LinerBreaksError):
    code = "no_anchor"


class ReferenceGap(LinerBreaksError):
    code = "reference_gap"


class ExtrapolationRequired(LinerBreaksError):
    code = "extrapolation_required"


class NonPositiveInput(LinerBreaksError):
    code = "non_positive_input"


class OutOfRangeUtilization(LinerBreaksError):
    code = "out_of_range_utilization"


class ZeroReference(LinerBreaksError):
    code = "zero_reference"


class TooFewObservations(LinerBreaksError):
    code = "too_few_observations"


class PanelBuildError(LinerBreaksError):
    """
    Aggregate of every cell-level failure met while building a panel.
    """

    code = "panel_build_failed"

    def __init__(self, failures, rows=None, log=None):
        super().__init__(
            f"{len(failures)} panel cell(s) could not be built",
            {"failures": [failure.as_dict() for failure in failures]},
        )
        self.failures = list(failures)
        self.rows = rows or []
        self.log = log


# I/O and configuration


class ConfigError(LinerBreaksError):
    code = "config_error"
    exit_code = 1


class SourceFileMissing(LinerBreaksError):
    code = "source_file_missing"


class SourceSchemaError(LinerBreaksError):
    code = "source_schema_error"

"""
Unit conversions used to bring heterogeneous freight, quantity and vessel-price sources onto a
per-TEU basis.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from apps.core.exceptions import InvalidParameter, NonPositiveInput, OutOfRangeUtilization
from apps.panel.models import CalibrationSolution, CpiTable

logger = logging.getLogger(__name__)

TEU_PER_FEU = 2.0
TEU_PER_VESSEL = 1200
NEWBUILDING_REFERENCE_DWT = 18000
SECONDHAND_REFERENCE_DWT = 16000
CONTAINER_REFERENCE_DWT = 12000
DWT_PER_TEU_BLOCK = 10
LTD_DIVISOR = 4
DWT_PER_TEU = 10
AGE_GAP_YEARS = 15

# Secondhand market observations: raw + coefficient * X = price * a
SECONDHAND_EQUATIONS = (
    (2.7, 2.0, 16.0),  # 1981
    (0.8, 0.0, 11.0),  # 1983
)


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise NonPositiveInput(f"{name} must be positive (got {value})", {name: value})


def cpi_adjust(nominal: float, year: int, cpi: CpiTable) -> float:
    """Express a nominal amount of ``year`` in base-year dollars."""
    return nominal * cpi.level(cpi.base_year) / cpi.level(year)


def cpi_inflate(real: float, year: int, cpi: CpiTable) -> float:
    """Inverse of ``cpi_adjust``."""
    return real * cpi.level(year) / cpi.level(cpi.base_year)


def tonmile_rate_to_teu(rate: float, miles: float, tons_per_teu: float) -> float:
    """
    Convert a freight rate quoted in USD per 100 ton-miles to USD per TEU.

    Args:
        rate (float): USD per 100 ton-miles.
        miles (float): Route distance in nautical miles.
        tons_per_teu (float): Cargo tons carried per TEU.

    Returns:
        float: USD per TEU.
    """
    _require_positive(rate=rate, miles=miles, tons_per_teu=tons_per_teu)
    per_ton = rate * miles / 100.0
    return per_ton * tons_per_teu


def average_route_miles(*distances: float) -> float:
    """Route distance as the mean of the port-pair distances quoted for it."""
    if not distances:
        raise InvalidParameter("At least one distance is required", {})
    _require_positive(**{f"distance_{index}": value for index, value in enumerate(distances)})
    return float(np.mean(distances))


def feu_to_teu(price_per_feu: float, teu_per_feu: float = TEU_PER_FEU) -> float:
    _require_positive(price_per_feu=price_per_feu, teu_per_feu=teu_per_feu)
    return price_per_feu / teu_per_feu


def newbuilding_per_teu(price_18000dwt: float, bulk_to_container_factor: float = 1.0) -> float:
    """
    Newbuilding price of an 18000 dwt bulk carrier expressed per TEU of container capacity.

    The price scales linearly to 12000 dwt, one tenth of which is taken as a 1200 TEU vessel.
    """
    _require_positive(
        price_18000dwt=price_18000dwt, bulk_to_container_factor=bulk_to_container_factor
    )
    price_12000dwt = price_18000dwt * CONTAINER_REFERENCE_DWT / NEWBUILDING_REFERENCE_DWT
    per_vessel = price_12000dwt / DWT_PER_TEU_BLOCK
    return per_vessel / TEU_PER_VESSEL * bulk_to_container_factor


def solve_calibration_system(
    equations: Sequence[Tuple[float, float, float]]
) -> CalibrationSolution:
    """
    Solve ``raw + coef * X = price * a`` for (X, a) from two observations.

    Args:
        equations: Two (raw, coef, price) triples.

    Returns:
        CalibrationSolution: depreciation rate X and conversion rate a.
    """
    if len(equations) != 2:
        raise InvalidParameter("Calibration needs exactly two equations", {"n": len(equations)})
    lhs = np.array([[coef, -price] for _, coef, price in equations], dtype=float)
    rhs = np.array([-raw for raw, _, _ in equations], dtype=float)
    try:
        depreciation, conversion = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise InvalidParameter(
            "Calibration equations are singular", {"equations": [list(eq) for eq in equations]}
        ) from exc
    return CalibrationSolution(float(depreciation), float(conversion))


def calibration_residuals(
    solution: CalibrationSolution,
    equations: Sequence[Tuple[float, float, float]] = SECONDHAND_EQUATIONS,
) -> Tuple[float, ...]:
    return tuple(
        raw + coef * solution.depreciation_rate - price * solution.conversion_rate
        for raw, coef, price in equations
    )


def secondhand_calibration() -> CalibrationSolution:
    solution = solve_calibration_system(SECONDHAND_EQUATIONS)
    if solution.depreciation_rate < 0:
        logger.warning(
            "Secondhand calibration gives a negative depreciation rate X=%.6f",
            solution.depreciation_rate,
        )
    return solution


@dataclass(frozen=True)
class SecondhandChain:
    """Intermediate values of the secondhand price conversion, in application order."""

    raw: float
    age_adjusted: float
    converted: float
    per_12000dwt: float
    per_vessel: float
    per_teu: float
    result: float


def secondhand_chain(
    raw_price_16000dwt: float,
    solution: CalibrationSolution,
    liner_to_container_factor: float = 1.0,
    age_gap: float = AGE_GAP_YEARS,
) -> SecondhandChain:
    """
    Apply the secondhand steps literally: raw + age_gap * X, / a, * 12000/16000, / 10, / 1200,
    then the liner-to-container factor.
    """
    _require_positive(
        raw_price_16000dwt=raw_price_16000dwt, liner_to_container_factor=liner_to_container_factor
    )
    age_adjusted = raw_price_16000dwt + age_gap * solution.depreciation_rate
    if not age_adjusted > 0:
        raise NonPositiveInput(
            f"Age-adjusted secondhand price {age_adjusted:.6g} is not positive",
            {
                "raw": raw_price_16000dwt,
                "age_gap": age_gap,
                "depreciation_rate": solution.depreciation_rate,
                "age_adjusted": age_adjusted,
            },
        )
    converted = age_adjusted / solution.conversion_rate
    per_12000dwt = converted * CONTAINER_REFERENCE_DWT / SECONDHAND_REFERENCE_DWT
    per_vessel = per_12000dwt / DWT_PER_TEU_BLOCK
    per_teu = per_vessel / TEU_PER_VESSEL
    return SecondhandChain(
        raw=raw_price_16000dwt,
        age_adjusted=age_adjusted,
        converted=converted,
        per_12000dwt=per_12000dwt,
        per_vessel=per_vessel,
        per_teu=per_teu,
        result=per_teu * liner_to_container_factor,
    )


def secondhand_per_teu(
    raw_price_16000dwt: float,
    solution: CalibrationSolution,
    liner_to_container_factor: float = 1.0,
    age_gap: float = AGE_GAP_YEARS,
) -> float:
    return secondhand_chain(
        raw_price_16000dwt, solution, liner_to_container_factor, age_gap
    ).result


def scrap_per_teu(
    price_per_ltd: float, ltd_divisor: float = LTD_DIVISOR, dwt_per_teu: float = DWT_PER_TEU
) -> float:
    """Scrap price per LTD to USD per TEU: / ltd_divisor gives USD per dwt, * dwt_per_teu."""
    _require_positive(price_per_ltd=price_per_ltd)
    return price_per_ltd / ltd_divisor * dwt_per_teu


def capacity_to_quantity(capacity_teu: float, utilization: float = 1.0) -> float:
    if not 0.0 < utilization <= 1.0:
        raise OutOfRangeUtilization(
            f"Utilization must lie in (0, 1] (got {utilization})", {"utilization": utilization}
        )
    if capacity_teu < 0:
        raise NonPositiveInput("Capacity cannot be negative", {"capacity_teu": capacity_teu})
    return capacity_teu * utilization

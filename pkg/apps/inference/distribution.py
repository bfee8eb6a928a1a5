"""
Limiting distribution of the break-date estimator.

With regime-moment ratio ``xi`` = d'Q2d / d'Q1d and long-run variance ratio ``phi`` = d'W2d / d'W1d
the rescaled estimation error converges to the argmax of a two-sided Brownian motion with drift,
whose CDF has a closed form on each half-line.
"""

import math

from scipy.optimize import brentq
from scipy.special import log_ndtr

from apps.core.exceptions import InvalidParameter

_LOG_2PI = math.log(2.0 * math.pi)


def _check_ratios(xi: float, phi: float):
    if not (xi > 0.0 and phi > 0.0) or not (math.isfinite(xi) and math.isfinite(phi)):
        raise InvalidParameter(
            "Distribution ratios must be positive and finite", {"xi": xi, "phi": phi}
        )


def _left_tail(x: float, xi: float, phi: float) -> float:
    x = abs(x)
    frac = xi / phi
    root = math.sqrt(x)
    return (
        -math.exp(0.5 * math.log(x) - x / 8.0 - 0.5 * _LOG_2PI)
        - (phi / xi * (phi + 2.0 * xi) / (phi + xi))
        * math.exp(frac * (1.0 + frac) * x / 2.0 + log_ndtr(-(0.5 + frac) * root))
        + math.exp(
            math.log(x / 2.0 - 2.0 + (phi + 2.0 * xi) ** 2 / ((phi + xi) * xi))
            + log_ndtr(-root / 2.0)
        )
    )


def _right_tail(x: float, xi: float, phi: float) -> float:
    frac = xi**2 / phi
    root = math.sqrt(x)
    return (
        1.0
        + math.sqrt(frac) * math.exp(0.5 * math.log(x) - frac * x / 8.0 - 0.5 * _LOG_2PI)
        + (xi / phi * (2.0 * phi + xi) / (phi + xi))
        * math.exp((phi + xi) * x / 2.0 + log_ndtr(-(phi + xi / 2.0) / math.sqrt(phi) * root))
        - math.exp(
            math.log((2.0 * phi + xi) ** 2 / ((phi + xi) * phi) - 2.0 + frac * x / 2.0)
            + log_ndtr(-math.sqrt(frac) * root / 2.0)
        )
    )


def argmax_cdf(x: float, xi: float = 1.0, phi: float = 1.0) -> float:
    """
    P(argmax V <= x) for the two-sided drifted Brownian motion V.

    Args:
        x (float): Point at which to evaluate the CDF.
        xi (float): Ratio of the regressor second moments after/before the break.
        phi (float): Ratio of the long-run variances after/before the break.

    Returns:
        float: CDF value in [0, 1]; equals xi / (phi + xi) at zero.
    """
    _check_ratios(xi, phi)
    if x == 0.0:
        return xi / (phi + xi)
    value = _left_tail(x, xi, phi) if x < 0.0 else _right_tail(x, xi, phi)
    return min(1.0, max(0.0, value))


def argmax_quantile(p: float, xi: float = 1.0, phi: float = 1.0, tol: float = 1e-10) -> float:
    """Inverse of ``argmax_cdf`` by bracketed root finding."""
    if not 0.0 < p < 1.0:
        raise InvalidParameter("Probability must lie in (0, 1)", {"p": p})
    center = argmax_cdf(0.0, xi, phi)
    if p == center:
        return 0.0

    def gap(x: float) -> float:
        return argmax_cdf(x, xi, phi) - p

    direction = 1.0 if p > center else -1.0
    edge = direction
    while gap(edge) * direction < 0.0:
        edge *= 2.0
        if abs(edge) > 1e9:
            raise InvalidParameter(
                "Quantile could not be bracketed", {"p": p, "xi": xi, "phi": phi}
            )
    low, high = (0.0, edge) if direction > 0 else (edge, 0.0)
    return brentq(gap, low, high, xtol=tol, maxiter=500)

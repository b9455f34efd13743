"""
Real Lambert W function.

Solves w·e^w = x on the principal branch W0 (w ≥ -1) and the lower branch
W-1 (w ≤ -1) with Halley's iteration, started from the branch-point series
near -1/e and from the log-loglog asymptote elsewhere.
"""
import logging
import math
from dataclasses import dataclass

from app.utils.errors import DomainError

logger = logging.getLogger(__name__)

BRANCH_POINT = -math.exp(-1.0)
BRANCH_SLACK = 1e-15
MAX_ITERATIONS = 50
STEP_TOLERANCE = 0.7e-16
RESIDUAL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LambertResult:
    value: float
    iterations: int
    residual: float


def _residual(w, x):
    return abs(w * math.exp(w) - x)


def _branch_series(x, sign):
    """
    Series in p = sqrt(2(e·x + 1)) around the branch point.

    sign=+1 gives the principal branch, -1 the lower one.
    """
    p = sign * math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _halley(x, w):
    best, best_residual = w, _residual(w, x)
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        ew = math.exp(w)
        f = w * ew - x
        w1 = w + 1.0
        if w1 == 0.0:
            break
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        residual = _residual(w, x)
        if residual <= best_residual:
            best, best_residual = w, residual
        if abs(dw) <= STEP_TOLERANCE * (2.0 + abs(w)):
            break
    if best_residual > RESIDUAL_TOLERANCE * max(1.0, abs(x)):
        logger.warning(f'Lambert W residual {best_residual:.3g} at x={x!r}')
    return LambertResult(best, iterations, best_residual)


def _check_finite(x):
    if not math.isfinite(x):
        raise DomainError(f'Lambert W needs a finite argument, got {x!r}')


def lambert_w0(x):
    """
    Principal branch W0.

    Args:
        x: Real argument, x ≥ -1/e (a 1e-15 slack below is clamped to the branch point)

    Returns:
        LambertResult with w ≥ -1 and w·e^w = x

    Raises:
        DomainError: x below the branch point
    """
    x = float(x)
    _check_finite(x)
    if x < BRANCH_POINT - BRANCH_SLACK:
        raise DomainError(f'W0 undefined below -1/e, got {x!r}')
    if x <= BRANCH_POINT:
        return LambertResult(-1.0, 0, _residual(-1.0, x))
    if x == 0.0:
        return LambertResult(0.0, 0, 0.0)

    if x < 1.0:
        w = _branch_series(x, 1.0) if x < -0.25 else x * (1.0 - x)
    else:
        log_x = math.log(x)
        w = log_x - math.log(log_x) if x > 3.0 else 0.5 * log_x + 0.5
    return _halley(x, w)


def lambert_wm1(x):
    """
    Lower branch W-1.

    Args:
        x: Real argument, -1/e ≤ x < 0

    Returns:
        LambertResult with w ≤ -1 and w·e^w = x

    Raises:
        DomainError: x outside [-1/e, 0)
    """
    x = float(x)
    _check_finite(x)
    if x >= 0.0 or x < BRANCH_POINT - BRANCH_SLACK:
        raise DomainError(f'W-1 defined on [-1/e, 0), got {x!r}')
    if x <= BRANCH_POINT:
        return LambertResult(-1.0, 0, _residual(-1.0, x))

    if x < -0.25:
        w = _branch_series(x, -1.0)
    else:
        log_minus_x = math.log(-x)
        w = log_minus_x - math.log(-log_minus_x)
    result = _halley(x, w)
    if result.value > -1.0:
        # Halley can drift across the branch point for arguments within rounding of -1/e
        return LambertResult(-1.0, result.iterations, _residual(-1.0, x))
    return result


def w0(x):
    """Principal-branch value only."""
    return lambert_w0(x).value

"""
Scalar optimization and root finding used by the closed-form and numerical solvers.
"""
import logging
import math

import numpy as np
from scipy import optimize

from app.utils.errors import NoRoot

logger = logging.getLogger(__name__)

# Golden ratio constant
PHI = (1 + math.sqrt(5)) / 2

COARSE_POINTS = 256
GOLDEN_RTOL = 1e-8
GOLDEN_MAX_ITER = 200
ROOT_XTOL = 1e-12
MAX_WIDENINGS = 60


def golden_section_maximize(f, a, b, rtol=GOLDEN_RTOL):
    """
    Derivative-free 1D maximization via golden section search.

    Args:
        f: Objective function to maximize
        a: Lower bound of search interval
        b: Upper bound of search interval
        rtol: Stop once the bracket is this narrow relative to its endpoints

    Returns:
        Tuple of (optimal x, f(x) at optimal x)
    """
    c = b - (b - a) / PHI
    d = a + (b - a) / PHI
    fc = f(c)
    fd = f(d)

    for _ in range(GOLDEN_MAX_ITER):
        if abs(b - a) <= rtol * max(abs(a), abs(b), np.finfo(float).tiny):
            break
        if fc < fd:
            a = c
            c = d
            fc = fd
            d = a + (b - a) / PHI
            fd = f(d)
        else:
            b = d
            d = c
            fd = fc
            c = b - (b - a) / PHI
            fc = f(c)

    x_opt = (a + b) / 2
    return x_opt, f(x_opt)


def _finite(values):
    values = np.asarray(values, dtype=float)
    return np.where(np.isfinite(values), values, -np.inf)


def maximize_scalar(f, lo, hi, points=COARSE_POINTS, rtol=GOLDEN_RTOL, vectorized=False):
    """
    Maximize f on [lo, hi]: coarse scan, then golden refinement of the winning bracket.

    The scan includes both endpoints so boundary maxima are found exactly.

    Args:
        f: Objective; takes a float, or an array when vectorized=True
        lo: Lower end of the interval
        hi: Upper end of the interval
        points: Coarse scan size
        rtol: Golden-section relative tolerance
        vectorized: Evaluate the scan in one call

    Returns:
        Tuple of (x, f(x))
    """
    xs = np.linspace(lo, hi, points)
    if vectorized:
        fs = _finite(f(xs))
    else:
        fs = _finite([f(float(x)) for x in xs])
    k = int(np.argmax(fs))
    best_x, best_f = float(xs[k]), float(fs[k])

    a = float(xs[max(k - 1, 0)])
    b = float(xs[min(k + 1, points - 1)])
    if b > a:
        scalar = (lambda x: float(_finite(f(np.array([x])))[0])) if vectorized else (lambda x: float(_finite(f(x))))
        x, fx = golden_section_maximize(scalar, a, b, rtol)
        if fx > best_f:
            best_x, best_f = x, fx
    logger.debug(f'maximize_scalar on [{lo:.6g}, {hi:.6g}] -> x={best_x:.10g}')
    return best_x, best_f


def find_root(f, lo, hi, xtol=ROOT_XTOL, lower_limit=None, upper_limit=None):
    """
    Bracketed root of f, widening the bracket geometrically until f changes sign.

    Args:
        f: Continuous scalar function
        lo: Initial lower bracket end
        hi: Initial upper bracket end
        xtol: Absolute tolerance passed to Brent's method
        lower_limit: Widening never goes below this value
        upper_limit: Widening never goes above this value

    Returns:
        The root as a float

    Raises:
        NoRoot: no sign change found within the limits
    """
    f_lo, f_hi = f(lo), f(hi)
    widenings = 0
    while f_lo * f_hi > 0:
        if widenings >= MAX_WIDENINGS:
            raise NoRoot(lo, hi)
        width = hi - lo
        new_lo = lo - width / 2
        new_hi = hi + width / 2
        if lower_limit is not None:
            new_lo = max(new_lo, lower_limit)
        if upper_limit is not None:
            new_hi = min(new_hi, upper_limit)
        if new_lo == lo and new_hi == hi:
            raise NoRoot(lo, hi)
        lo, hi = new_lo, new_hi
        f_lo, f_hi = f(lo), f(hi)
        widenings += 1
        logger.debug(f'Widened root bracket to [{lo:.6g}, {hi:.6g}]')

    if f_lo == 0:
        return float(lo)
    if f_hi == 0:
        return float(hi)
    return float(optimize.brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))

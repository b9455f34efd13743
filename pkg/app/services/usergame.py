"""
End-user power-control game.

Payoffs, SNR/SINR, best responses and the symmetric Nash equilibrium for
every scenario. Payoff evaluators accept scalars or numpy arrays so the
brute-force oracle can evaluate whole grids at once.
"""
import logging

import numpy as np

from app.models.grid import DEFAULT_BR_MAX_ITER, DEFAULT_BR_TOL
from app.models.market import ChannelModel
from app.models.solution import PowerProfile
from app.utils.errors import DomainError, NoConvergence

logger = logging.getLogger(__name__)

# Lower power bound where ln(γ) is evaluated, as a fraction of T̄
HIGH_SNR_FLOOR = 1e-6


def _out(value):
    return float(value) if np.ndim(value) == 0 else value


def _positive_bandwidth(w):
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise DomainError('bandwidth must be positive')
    return w


def snr(t, w, params, model, t_others=None):
    """
    Per-user signal-to-noise ratio (SINR under interference).

    Args:
        t: User's transmit power
        w: Leased bandwidth
        params: MarketParams
        model: ChannelModel
        t_others: Power of every other user; defaults to t (symmetric profile)

    Returns:
        L·h·t/((w/n)·σ²) without interference, L·h·t/(w·σ² + (n-1)·h·t_others) with it
    """
    w = _positive_bandwidth(w)
    t = np.asarray(t, dtype=float)
    if model is ChannelModel.INTERFERENCE:
        others = t if t_others is None else np.asarray(t_others, dtype=float)
        ratio = params.L * params.h * t / (w * params.sigma2 + (params.n - 1) * params.h * others)
    else:
        ratio = params.L * params.h * t * params.n / (w * params.sigma2)
    return _out(ratio)


def throughput(t_i, t_others, w, params, scenario):
    """
    Rate term of the user payoff: (W/n)·ln(1+γ) without interference, W·ln(1+γ) with it.

    The high-SNR regime uses ln(γ).

    Raises:
        DomainError: high-SNR rate at γ ≤ 0
    """
    w = _positive_bandwidth(w)
    gamma = np.asarray(snr(t_i, w, params, scenario.model, t_others))
    prefactor = w if scenario.interference else w / params.n
    if scenario.high_snr:
        if np.any(gamma <= 0):
            raise DomainError('high-SNR rate needs positive power')
        return _out(prefactor * np.log(gamma))
    return _out(prefactor * np.log1p(gamma))


def user_payoff(t_i, t_others, c_p, w, params, scenario):
    """
    Net utility of one user: rate minus payment.

    Args:
        t_i: The user's power
        t_others: Power of every other user
        c_p: Provider tariff
        w: Leased bandwidth
        params: MarketParams
        scenario: Scenario

    Returns:
        throughput - c_p under flat rate, throughput - c_p·t_i under power-based pricing
    """
    rate = throughput(t_i, t_others, w, params, scenario)
    if scenario.flat_rate:
        return _out(rate - np.asarray(c_p, dtype=float))
    return _out(rate - np.asarray(c_p, dtype=float) * np.asarray(t_i, dtype=float))


def full_power_price(w, params, scenario, t_others=None):
    """
    Largest power tariff at which a user still transmits at T̄.

    With t_others omitted every other user is assumed at T̄.
    """
    w = _positive_bandwidth(w)
    L, h, n, t_bar, sigma2 = params.L, params.h, params.n, params.t_bar, params.sigma2
    others = t_bar if t_others is None else np.asarray(t_others, dtype=float)
    if scenario.high_snr:
        price = w / t_bar if scenario.interference else w / (n * t_bar)
    elif scenario.interference:
        price = L * w * h / (w * sigma2 + (n - 1) * h * others + L * h * t_bar)
    else:
        price = L * w * h / (w * sigma2 + L * h * n * t_bar)
    return _out(price)


def silence_price(params):
    """Power tariff at and above which users stop transmitting (general regime)."""
    return params.L * params.h / params.sigma2


def _safe_inverse(c_p):
    c_p = np.asarray(c_p, dtype=float)
    return np.divide(1.0, c_p, out=np.full(c_p.shape, np.inf), where=c_p > 0)


def best_response(c_p, w, t_others, params, scenario):
    """
    One user's optimal power given the others' power.

    Args:
        c_p: Provider tariff (≥ 0)
        w: Leased bandwidth (> 0)
        t_others: Power of every other user
        params: MarketParams
        scenario: Scenario

    Returns:
        Power in [0, T̄]; T̄ under flat rate
    """
    w = _positive_bandwidth(w)
    c_p = np.asarray(c_p, dtype=float)
    t_bar = params.t_bar
    shape = np.broadcast(c_p, w, np.asarray(t_others, dtype=float)).shape

    if scenario.flat_rate:
        return _out(np.full(shape, t_bar))

    inverse = _safe_inverse(c_p)
    if scenario.high_snr:
        users = 1 if scenario.interference else params.n
        return _out(np.broadcast_to(np.minimum(t_bar, w * inverse / users), shape).copy())

    L, h, n, sigma2 = params.L, params.h, params.n, params.sigma2
    full = full_power_price(w, params, scenario, t_others)
    if scenario.interference:
        others = np.asarray(t_others, dtype=float)
        silent = L * w * h / (w * sigma2 + (n - 1) * h * others)
        interior = w * inverse - w * sigma2 / (L * h) - (n - 1) * others / L
    else:
        silent = silence_price(params)
        interior = (w / n) * (inverse - sigma2 / (L * h))
    response = np.where(c_p <= full, t_bar, np.where(c_p >= silent, 0.0, interior))
    return _out(np.broadcast_to(np.clip(response, 0.0, t_bar), shape).copy())


def _symmetric_power(c_p, w, params, scenario):
    if scenario.flat_rate:
        return params.t_bar
    if scenario.interference and not scenario.high_snr:
        L, h, n, sigma2, t_bar = params.L, params.h, params.n, params.sigma2, params.t_bar
        if c_p <= full_power_price(w, params, scenario):
            return t_bar
        if c_p >= silence_price(params):
            return 0.0
        return ((L * h / c_p - sigma2) * w) / (h * (n - 1 + L))
    return best_response(c_p, w, params.t_bar, params, scenario)


def nash_equilibrium(c_p, w, params, scenario, iterate=False,
                     br_tol=DEFAULT_BR_TOL, br_max_iter=DEFAULT_BR_MAX_ITER):
    """
    Symmetric Nash equilibrium of the power-control game.

    Args:
        c_p: Provider tariff
        w: Leased bandwidth
        params: MarketParams
        scenario: Scenario
        iterate: Iterate best responses from T̄/2 instead of evaluating the fixed point directly
        br_tol: Stop iterating once |Δt| ≤ br_tol
        br_max_iter: Iteration cap

    Returns:
        PowerProfile

    Raises:
        NoConvergence: iteration cap reached
    """
    c_p, w = float(c_p), float(w)
    if not iterate:
        return PowerProfile(float(_symmetric_power(c_p, w, params, scenario)))

    t = 0.5 * params.t_bar
    step = 1.0
    last_move = np.inf
    for iteration in range(1, br_max_iter + 1):
        delta = best_response(c_p, w, t, params, scenario) - t
        if abs(delta) <= br_tol:
            logger.debug(f'Best-response iteration converged after {iteration} steps')
            return PowerProfile(float(t))
        if abs(delta) >= last_move:
            step *= 0.5
        last_move = abs(delta)
        t = float(np.clip(t + step * delta, 0.0, params.t_bar))

    raise NoConvergence(br_max_iter, cell={'c_p': c_p, 'w': w})


def equilibrium_metrics(t, c_p, w, params, scenario):
    """Per-user (utility, throughput) when every user transmits at t."""
    return (
        float(user_payoff(t, t, c_p, w, params, scenario)),
        float(throughput(t, t, w, params, scenario)),
    )


def user_metrics(params):
    """
    Closed-form per-user utility and throughput at the power-based interference equilibrium.

    Returns:
        Tuple of (utility, throughput)
    """
    n, L, h, t_bar, sigma2 = params.n, params.L, params.h, params.t_bar, params.sigma2
    log_term = np.log(2 * (n + L - 1) / (2 * n + L - 2))
    utility = (t_bar * h / (2 * sigma2)) * (2 * (n + L - 1) * log_term - L)
    rate = (t_bar * h * (n + L - 1) / sigma2) * log_term
    return float(utility), float(rate)

"""
Provider and owner layers and the full three-level solve.

Each layer has a closed-form path (the tabulated optima) and a numerical
path that maximizes the layer's payoff directly, with the users at their
Nash equilibrium underneath. Both paths must agree.
"""
import logging
import math
from enum import Enum

import numpy as np

from app.models.market import Method, Scenario
from app.models.solution import (
    EquilibriumSolution,
    OwnerDecision,
    ProviderDecision,
    RatioEntry,
    RatioReport,
)
from app.services import usergame
from app.services.numerics import find_root, maximize_scalar
from app.services.special import lambert_w0, w0
from app.services.validation import validate
from app.utils.errors import DomainError, InfeasibleTariff, NoRoot

logger = logging.getLogger(__name__)

# Owner tariff search cap where the provider never exits (flat rate, no interference)
OPEN_TARIFF_CAP = 16.0
# Numerical searches start at this fraction of their upper bound
SEARCH_FLOOR = 1e-9
# Bracket for the flat-rate interference-free owner root; the equation also vanishes at 0
FLAT_FREE_ROOT_BRACKET = (1e-3, 1.0)


class RootVariant(str, Enum):
    """Which root equation fixes the flat-rate high-SNR interference tariff."""
    TABLE = 'table'
    APPENDIX = 'appendix'


def _noise_unit(params):
    """hT̄/σ²."""
    return params.h * params.t_bar / params.sigma2


def _exit_tariff(params, scenario):
    """Owner tariff at which a power-based provider stops leasing."""
    n, L = params.n, params.L
    if scenario.high_snr:
        return float(n) if scenario.interference else 1.0
    if scenario.interference:
        return n * L / (n + L - 1)
    return 1.0


def lease_upper_bound(c_w, params, scenario):
    """
    Largest lease with non-negative provider profit at tariff c_w.

    Returns:
        Upper end of the provider's search interval; 0 when the provider exits,
        inf when the lease is unbounded (c_w = 0)
    """
    if c_w < 0:
        raise DomainError(f'bandwidth tariff must be non-negative, got {c_w}')
    n, L = params.n, params.L
    scale, unit = params.scale, _noise_unit(params)

    if not scenario.flat_rate:
        if scenario.high_snr:
            return params.w_bar if c_w < _exit_tariff(params, scenario) else 0.0
        if c_w >= _exit_tariff(params, scenario):
            return 0.0
        if c_w == 0:
            return math.inf
        if scenario.interference:
            return (n * L / c_w - (n + L - 1)) * unit
        return scale * (1.0 / c_w - 1.0)

    if scenario.high_snr:
        if scenario.interference:
            return max(0.0, (L * math.exp(-c_w / n) - (n - 1)) * unit)
        return scale * math.exp(-c_w)
    if c_w == 0:
        return math.inf
    if scenario.interference:
        return max(0.0, (L / math.expm1(c_w / n) + 1 - n) * unit)
    return scale / math.expm1(c_w)


def tariff_upper_bound(params, scenario):
    """Upper end of the owner's tariff search interval."""
    n, L = params.n, params.L
    if not scenario.flat_rate:
        if scenario.high_snr:
            return _exit_tariff(params, scenario) - params.epsilon
        return _exit_tariff(params, scenario)
    if not scenario.interference or n == 1:
        return OPEN_TARIFF_CAP
    if scenario.high_snr:
        return n * math.log(L / (n - 1)) if L > n - 1 else 0.0
    return n * math.log1p(L / (n - 1))


def full_power_tariff(w, params, scenario):
    """
    Provider's tariff rule C_P(W).

    Flat rate charges the participation tariff (the users' full-power rate);
    power-based pricing charges the largest price at which users still
    transmit at T̄.
    """
    if scenario.flat_rate:
        return float(usergame.throughput(params.t_bar, params.t_bar, w, params, scenario))
    return float(usergame.full_power_price(w, params, scenario))


def provider_payoff(c_p, w, c_w, t, params, scenario):
    """v_P = n·c_p − c_w·w (flat rate) or c_p·n·t − c_w·w (power-based)."""
    if scenario.flat_rate:
        return params.n * c_p - c_w * w
    return c_p * params.n * t - c_w * w


def _flat_interference_value(w, c_w, params, scenario):
    """Flat-rate interference provider profit along the participation tariff; vectorized over w."""
    rate = usergame.throughput(params.t_bar, params.t_bar, w, params, scenario)
    return params.n * np.asarray(rate) - c_w * np.asarray(w)


def _closed_form_lease(c_w, params, scenario):
    n, L = params.n, params.L
    scale, unit = params.scale, _noise_unit(params)

    if not scenario.flat_rate:
        if scenario.high_snr:
            return params.w_bar if c_w < _exit_tariff(params, scenario) else 0.0
        if c_w >= _exit_tariff(params, scenario):
            return 0.0
        if scenario.interference:
            k = n + L - 1
            return (math.sqrt(c_w * n * L * k) - c_w * k) * unit / c_w
        root = math.sqrt(c_w)
        return (1 - root) * scale / root

    if scenario.high_snr:
        if not scenario.interference:
            return scale / math.exp(1 + c_w)
        if n == 1:
            return L * unit * math.exp(-1 - c_w)
        branch = w0((n - 1) / L * math.exp((n + c_w) / n))
        if branch >= 1:
            return 0.0
        return (n - 1) * unit * (1 / branch - 1)

    if not scenario.interference:
        branch = w0(-math.exp(-1 - c_w))
        return -scale * branch / (1 + branch)

    bound = lease_upper_bound(c_w, params, scenario)
    if bound <= 0:
        return 0.0
    lease, value = maximize_scalar(
        lambda w: _flat_interference_value(w, c_w, params, scenario),
        bound * SEARCH_FLOOR, bound, vectorized=True,
    )
    return lease if value > 0 else 0.0


def _numerical_lease(c_w, params, scenario):
    bound = lease_upper_bound(c_w, params, scenario)
    if bound <= 0:
        return 0.0

    def value(w):
        c_p = full_power_tariff(w, params, scenario)
        t = usergame.nash_equilibrium(c_p, w, params, scenario).t
        return provider_payoff(c_p, w, c_w, t, params, scenario)

    lease, best = maximize_scalar(value, bound * SEARCH_FLOOR, bound)
    return lease if best > 0 else 0.0


def provider_best_bandwidth(c_w, params, scenario, method=Method.CLOSED_FORM):
    """
    Provider's optimal lease and tariff at owner tariff c_w.

    Args:
        c_w: Owner tariff per unit bandwidth
        params: MarketParams
        scenario: Scenario
        method: CLOSED_FORM or NUMERICAL

    Returns:
        ProviderDecision with the users' equilibrium power

    Raises:
        InfeasibleTariff: the provider leases nothing at this tariff
        DomainError: negative tariff, or a zero tariff with unbounded demand
    """
    c_w = float(c_w)
    if math.isinf(lease_upper_bound(c_w, params, scenario)):
        raise DomainError('zero bandwidth tariff gives unbounded demand')

    if Method(method) is Method.NUMERICAL:
        w = _numerical_lease(c_w, params, scenario)
    else:
        w = _closed_form_lease(c_w, params, scenario)
    if w <= 0:
        logger.warning(f'Provider exits at c_w={c_w:.6g} ({scenario.label})')
        raise InfeasibleTariff(c_w)

    c_p = full_power_tariff(w, params, scenario)
    t = usergame.nash_equilibrium(c_p, w, params, scenario).t
    v_p = provider_payoff(c_p, w, c_w, t, params, scenario)
    return ProviderDecision(w=float(w), c_p=c_p, v_p=float(v_p), t=float(t))


def _lease_or_zero(c_w, params, scenario):
    if c_w < 0 or math.isinf(lease_upper_bound(c_w, params, scenario)):
        return 0.0
    return max(0.0, _closed_form_lease(c_w, params, scenario))


def _flat_free_tariff():
    def residual(c_w):
        return c_w - (1 + w0(-math.exp(-1 - c_w))) ** 2

    lo, hi = FLAT_FREE_ROOT_BRACKET
    return find_root(residual, lo, hi, lower_limit=1e-6, upper_limit=OPEN_TARIFF_CAP)


def _flat_interference_high_snr_tariff(params, root_variant):
    n, L = params.n, params.L
    if n == 1:
        return 1.0
    if L <= n - 1:
        # interference alone drives ln(γ) negative; no tariff earns revenue
        raise InfeasibleTariff(0.0)

    def branch(c_w):
        return lambert_w0((n - 1) / L * math.exp((n + c_w) / n)).value

    if RootVariant(root_variant) is RootVariant.APPENDIX:
        return find_root(lambda c: branch(c) ** 2 - (1 - c), 0.0, 1.0, lower_limit=0.0, upper_limit=1.0)
    return find_root(lambda c: n * branch(c) ** 2 + c - n, 0.0, float(n), lower_limit=0.0, upper_limit=float(n))


def _closed_form_tariff(params, scenario, root_variant):
    n, L = params.n, params.L
    if not scenario.flat_rate:
        if scenario.high_snr:
            return _exit_tariff(params, scenario) - params.epsilon
        if scenario.interference:
            return n * L / (4 * (n + L - 1))
        return 0.25

    if scenario.high_snr:
        if scenario.interference:
            return _flat_interference_high_snr_tariff(params, root_variant)
        return 1.0
    if not scenario.interference:
        return _flat_free_tariff()

    hi = tariff_upper_bound(params, scenario)
    c_w, _ = maximize_scalar(lambda c: c * _lease_or_zero(c, params, scenario), hi * SEARCH_FLOOR, hi)
    return c_w


def owner_best_tariff(params, scenario, method=Method.CLOSED_FORM, root_variant=RootVariant.TABLE):
    """
    Owner's optimal bandwidth tariff anticipating the provider.

    Args:
        params: MarketParams
        scenario: Scenario
        method: CLOSED_FORM or NUMERICAL (maximize c_w·W(c_w) on the admissible tariff interval)
        root_variant: Root equation for the flat-rate high-SNR interference case

    Returns:
        OwnerDecision

    Raises:
        NoRoot: a root bracket did not change sign
        InfeasibleTariff: the provider exits at the optimal tariff
    """
    validate(params, scenario)
    if Method(method) is Method.NUMERICAL:
        hi = tariff_upper_bound(params, scenario)
        if hi <= 0:
            raise InfeasibleTariff(0.0)
        c_w, _ = maximize_scalar(lambda c: c * _lease_or_zero(c, params, scenario), hi * SEARCH_FLOOR, hi)
    else:
        c_w = _closed_form_tariff(params, scenario, root_variant)

    w = provider_best_bandwidth(c_w, params, scenario).w
    logger.debug(f'Owner tariff {c_w:.10g} ({scenario.label}, {Method(method).value})')
    return OwnerDecision(c_w=float(c_w), v_a=float(c_w * w), w=w)


def _assemble(c_w, decision, params, scenario, method):
    utility, rate = usergame.equilibrium_metrics(decision.t, decision.c_p, decision.w, params, scenario)
    return EquilibriumSolution(
        c_w=float(c_w),
        w=decision.w,
        c_p=decision.c_p,
        t=decision.t,
        v_p=decision.v_p,
        v_a=float(c_w * decision.w),
        u_user=utility,
        throughput=rate,
        snr=float(usergame.snr(decision.t, decision.w, params, scenario.model)),
        method=method,
    )


def _table_decision(params, scenario, root_variant):
    """Tabulated (C_W, provider decision) pair for every scenario."""
    n, L, h, sigma2, t_bar = params.n, params.L, params.h, params.sigma2, params.t_bar
    if not scenario.flat_rate and not scenario.high_snr:
        c_w = _closed_form_tariff(params, scenario, root_variant)
        w = (n + L - 1) * _noise_unit(params) if scenario.interference else params.scale
        c_p = L * h / (2 * sigma2)
        return c_w, ProviderDecision(w=w, c_p=c_p, v_p=params.scale / 4, t=t_bar)
    if not scenario.flat_rate:
        c_w = _closed_form_tariff(params, scenario, root_variant)
        w = params.w_bar
        c_p = w / t_bar if scenario.interference else w / (t_bar * n)
        return c_w, ProviderDecision(w=w, c_p=c_p, v_p=params.epsilon * w, t=t_bar)
    c_w = _closed_form_tariff(params, scenario, root_variant)
    return c_w, provider_best_bandwidth(c_w, params, scenario)


def solve_equilibrium(params, scenario, method=Method.CLOSED_FORM, root_variant=RootVariant.TABLE):
    """
    Three-level equilibrium.

    Args:
        params: MarketParams
        scenario: Scenario
        method: CLOSED_FORM evaluates the tabulated optima; NUMERICAL composes
            owner_best_tariff, provider_best_bandwidth and nash_equilibrium numerically
        root_variant: Root equation for the flat-rate high-SNR interference case

    Returns:
        EquilibriumSolution
    """
    validate(params, scenario)
    method = Method(method)
    if method is Method.NUMERICAL:
        owner = owner_best_tariff(params, scenario, Method.NUMERICAL, root_variant)
        c_w = owner.c_w
        decision = provider_best_bandwidth(c_w, params, scenario, Method.NUMERICAL)
    else:
        c_w, decision = _table_decision(params, scenario, root_variant)

    solution = _assemble(c_w, decision, params, scenario, method)
    logger.info(
        f'Solved {scenario.label} ({method.value}): c_w={solution.c_w:.6g} '
        f'w={solution.w:.6g} c_p={solution.c_p:.6g} v_p={solution.v_p:.6g} v_a={solution.v_a:.6g}'
    )
    return solution


def solve_both(params, scenario, root_variant=RootVariant.TABLE):
    """
    Closed-form and numerical solutions side by side.

    Returns:
        Dict with both solutions and their largest relative component difference
    """
    closed = solve_equilibrium(params, scenario, Method.CLOSED_FORM, root_variant)
    numerical = solve_equilibrium(params, scenario, Method.NUMERICAL, root_variant)
    return {
        'closed': closed.to_dict(),
        'numerical': numerical.to_dict(),
        'discrepancy': closed.max_discrepancy(numerical),
    }


def scaled_coefficients(solution, params, scenario):
    """
    Dimensionless equilibrium coefficients.

    Bandwidth and profits are divided by nLhT̄/σ², the flat tariff by LhT̄/σ²,
    the power tariff by Lh/σ² and the power by T̄.
    """
    tariff_unit = params.user_scale if scenario.flat_rate else params.tariff_scale
    return {
        'c_w': solution.c_w,
        'w': solution.w / params.scale,
        'c_p': solution.c_p / tariff_unit,
        't': solution.t / params.t_bar,
        'v_p': solution.v_p / params.scale,
        'v_a': solution.v_a / params.scale,
    }


# (name, numerator scenario, denominator scenario, field or 'total' / 'split', quoted value)
RATIO_SPECS = (
    ('c_w high-snr/general', 'FR-IF-H', 'FR-IF-G', 'c_w', 2.14),
    ('c_p high-snr/general', 'FR-IF-H', 'FR-IF-G', 'c_p', 0.51),
    ('v_p high-snr/general', 'FR-IF-H', 'FR-IF-G', 'v_p', 0.429),
    ('c_w flat/power', 'FR-IF-G', 'PB-IF-G', 'c_w', 1.87),
    ('v_p/v_a flat', 'FR-IF-G', 'FR-IF-G', 'split', 1.462),
    ('total profit flat/power', 'FR-IF-G', 'PB-IF-G', 'total', 0.532 / 0.5),
)


def ratio_report(params):
    """
    Ratios comparing the interference-free equilibria across regimes and pricing schemes.

    Returns:
        RatioReport with computed and quoted values side by side
    """
    solutions = {}
    for scenario in Scenario.all():
        if not scenario.interference:
            solutions[scenario.label] = solve_equilibrium(params, scenario)

    entries = []
    for name, top, bottom, field, quoted in RATIO_SPECS:
        numerator, denominator = solutions[top], solutions[bottom]
        if field == 'split':
            computed = numerator.v_p / numerator.v_a
        elif field == 'total':
            computed = (numerator.v_p + numerator.v_a) / (denominator.v_p + denominator.v_a)
        else:
            computed = getattr(numerator, field) / getattr(denominator, field)
        entries.append(RatioEntry(name=name, computed=float(computed), quoted=quoted))
    return RatioReport(entries=tuple(entries))


__all__ = [
    'NoRoot',
    'RootVariant',
    'full_power_tariff',
    'lease_upper_bound',
    'owner_best_tariff',
    'provider_best_bandwidth',
    'provider_payoff',
    'ratio_report',
    'scaled_coefficients',
    'solve_both',
    'solve_equilibrium',
    'tariff_upper_bound',
]

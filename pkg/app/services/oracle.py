"""
Brute-force equilibrium oracle.

Re-derives equilibria from the raw user payoffs by nested grid search: users
play damped best-response iteration (each best response a golden-section
search of the payoff), the provider searches (W, C_P) and the owner searches
C_W. Nothing here evaluates a closed form or the Lambert W function.

Every axis is searched the same way: a log-spaced coarse scan over four
decades below the axis maximum, then batched zoom passes that re-grid the
bracket around the current winner with `refine` linear subdivisions until
the bracket is narrow enough for that level.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from app.models.grid import (
    DEFAULT_BR_MAX_ITER,
    DEFAULT_BR_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINE,
    DEFAULT_RTOL,
    GridSpec,
)
from app.models.market import Method
from app.models.solution import (
    COMPONENTS,
    DeviationReport,
    EquilibriumSolution,
    ProviderDecision,
    relative_difference,
)
from app.services import usergame
from app.services.numerics import PHI
from app.services.validation import validate, validate_grid
from app.utils.errors import NoConvergence

logger = logging.getLogger(__name__)

AXIS_DECADES = 4
TIE_RTOL = 1e-9
ZOOM_MAX_PASSES = 64
TARIFF_WINDOW = 2
OWNER_WINDOW = 2
DEVIATION_POINTS = 10_001
AGREEMENT_FLOOR = 0.02
PARTICIPATION_SLACK = 1e-9
TINY = np.finfo(float).tiny
PLATEAU_FLOOR = 1e-7
PLATEAU_BISECTIONS = 48


@dataclass(frozen=True)
class RevenueTable:
    """Provider revenue on the coarse bandwidth axis; independent of C_W."""
    w_axis: np.ndarray
    cp_axis: np.ndarray
    revenue: np.ndarray
    cp_index: np.ndarray


def default_grid(params, scenario, points=DEFAULT_GRID_POINTS, refine=DEFAULT_REFINE,
                 rtol=DEFAULT_RTOL, br_tol=DEFAULT_BR_TOL, br_max_iter=DEFAULT_BR_MAX_ITER):
    """
    Grid whose bounds bracket the equilibrium of every scenario with margin.

    Args:
        params: MarketParams
        scenario: Scenario
        points: Coarse points per axis

    Returns:
        GridSpec
    """
    n, L = params.n, params.L
    silence = params.tariff_scale
    if scenario.flat_rate:
        cw_max = 2 * max(1.0, n * math.log1p(L / max(1, n - 1)))
    elif not scenario.interference:
        cw_max = 2.0
    elif scenario.high_snr:
        cw_max = 2.0 * n
    else:
        cw_max = 2 * n * L / (n + L - 1)

    if not scenario.flat_rate and scenario.high_snr:
        w_max = params.w_bar
        cp_max = 2 * max(silence, params.w_bar / params.t_bar)
    else:
        w_max = 4 * params.scale
        cp_max = 2 * silence

    return GridSpec(
        cw_points=points, w_points=points, cp_points=points,
        cw_max=cw_max, w_max=w_max, cp_max=cp_max,
        br_tol=br_tol, br_max_iter=br_max_iter, refine=refine, rtol=rtol,
    )


def agreement_tolerance(grid):
    """Relative tolerance for comparing oracle output with the analytic solvers."""
    return max(AGREEMENT_FLOOR, 2 * grid.rtol ** 0.25)


def _axis(upper, points):
    if points == 1:
        return np.array([float(upper)])
    return np.geomspace(upper * 10.0 ** -AXIS_DECADES, upper, points)


def _finite(values):
    values = np.asarray(values, dtype=float)
    return np.where(np.isfinite(values), values, -np.inf)


def _first_best(values):
    """Index of the smallest coordinate whose value is within TIE_RTOL of the maximum."""
    best = values.max(axis=-1, keepdims=True)
    return np.argmax(values >= best - TIE_RTOL * np.abs(best), axis=-1)


def _pick(array, index):
    return np.take_along_axis(array, index[..., None], axis=-1)[..., 0]


def _power_floor(params, scenario):
    return usergame.HIGH_SNR_FLOOR * params.t_bar if scenario.high_snr else 0.0


def _golden_steps(span, tol):
    return max(1, math.ceil(math.log(tol / 4 / span) / math.log(1 / PHI)))


def _best_power(t_others, c_p, w, params, scenario, grid):
    """Vectorized best response: golden search of the raw payoff, then endpoints compared."""
    t_lo, t_bar = _power_floor(params, scenario), params.t_bar

    def payoff(t):
        return _finite(usergame.user_payoff(t, t_others, c_p, w, params, scenario))

    a = np.full(t_others.shape, t_lo)
    b = np.full(t_others.shape, t_bar)
    c = b - (b - a) / PHI
    d = a + (b - a) / PHI
    fc, fd = payoff(c), payoff(d)
    for _ in range(_golden_steps(t_bar - t_lo, grid.br_tol)):
        right = fc < fd
        a = np.where(right, c, a)
        b = np.where(right, b, d)
        trial = np.where(right, a + (b - a) / PHI, b - (b - a) / PHI)
        f_trial = payoff(trial)
        c, d, fc, fd = (
            np.where(right, d, trial),
            np.where(right, trial, c),
            np.where(right, fd, f_trial),
            np.where(right, f_trial, fc),
        )

    candidates = np.stack([0.5 * (a + b), a * 0 + t_lo, b * 0 + t_bar], axis=-1)
    values = np.stack([payoff(candidates[:, k]) for k in range(3)], axis=-1)
    return candidates[np.arange(candidates.shape[0]), np.argmax(values, axis=-1)]


def equilibrium_power(c_p, w, params, scenario, grid):
    """
    Symmetric user equilibrium by damped best-response iteration from T̄/2.

    The step for a cell is halved whenever its |Δt| fails to shrink. A cell has
    converged once |Δt| or its damped move is within br_tol; converged cells
    drop out of the active set.

    Raises:
        NoConvergence: some cell still moving after br_max_iter iterations
    """
    c_p, w = np.broadcast_arrays(np.asarray(c_p, dtype=float), np.asarray(w, dtype=float))
    shape = c_p.shape
    prices, bands = c_p.ravel(), w.ravel()
    t_lo, t_bar = _power_floor(params, scenario), params.t_bar

    t = np.full(prices.shape, 0.5 * t_bar)
    step = np.ones_like(t)
    last_move = np.full_like(t, np.inf)
    active = np.arange(t.size)
    for _ in range(grid.br_max_iter):
        if active.size == 0:
            break
        current = t[active]
        delta = _best_power(current, prices[active], bands[active], params, scenario, grid) - current
        move = np.abs(delta)
        step[active] = np.where(move >= last_move[active], 0.5 * step[active], step[active])
        last_move[active] = move
        # golden search resolves an interior optimum only to ~sqrt(eps); a damped
        # move below br_tol counts as converged
        exact = move <= grid.br_tol
        done = exact | (step[active] * move <= grid.br_tol)
        t[active] = np.where(exact, current + delta, np.clip(current + step[active] * delta, t_lo, t_bar))
        active = active[~done]

    if active.size:
        cell = {'c_p': float(prices[active[0]]), 'w': float(bands[active[0]])}
        raise NoConvergence(grid.br_max_iter, cell=cell)
    return t.reshape(shape)


def _power_revenue(c_p, w, params, scenario, grid):
    return c_p * params.n * equilibrium_power(c_p, w, params, scenario, grid)


def _participation(w, params, scenario, grid):
    """Flat-rate tariff pinned at the users' equilibrium rate, with the resulting revenue."""
    w = np.asarray(w, dtype=float)
    t = equilibrium_power(np.zeros_like(w), w, params, scenario, grid)
    c_p = np.asarray(usergame.throughput(t, t, w, params, scenario), dtype=float)
    return c_p, params.n * c_p


def _zoom(evaluate, lo, hi, x0, v0, target, refine):
    """
    Batched bracket subdivision.

    Args:
        evaluate: Maps candidates of shape (*batch, refine+1) to values of the same shape
        lo: Bracket lower ends, shape batch
        hi: Bracket upper ends, shape batch
        x0: Incumbent points
        v0: Incumbent values
        target: Stop once every bracket is this narrow relative to its upper end
        refine: Subdivisions per pass

    Returns:
        Tuple of (best x, best value) arrays
    """
    fractions = np.linspace(0.0, 1.0, refine + 1)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    best_x, best_v = np.array(x0, dtype=float), np.array(v0, dtype=float)
    for passes in range(1, ZOOM_MAX_PASSES + 1):
        xs = lo[..., None] + (hi - lo)[..., None] * fractions
        values = _finite(evaluate(xs))
        k = _first_best(values)
        x_k, v_k = _pick(xs, k), _pick(values, k)

        slack = np.where(np.isfinite(best_v), TIE_RTOL * np.abs(best_v), 0.0)
        better = (v_k > best_v + slack) | ((v_k >= best_v - slack) & (x_k < best_x))
        best_x = np.where(better, x_k, best_x)
        best_v = np.where(better, v_k, best_v)

        lo = _pick(xs, np.maximum(k - 1, 0))
        hi = _pick(xs, np.minimum(k + 1, refine))
        if np.all(hi - lo <= target * np.maximum(np.abs(hi), TINY)):
            break
    logger.debug(f'Zoom finished after {passes} passes (target {target:.3g})')
    return best_x, best_v


def _neighbors(axis, k, reach=1):
    last = axis.size - 1
    return axis[np.maximum(k - reach, 0)], axis[np.minimum(k + reach, last)]


@lru_cache(maxsize=32)
def revenue_table(params, scenario, grid):
    """
    Provider revenue R(W) on the coarse W axis, with C_P zoomed to rtol per point.

    Cached per instance and grid; the arrays are read-only.
    """
    w_axis = _axis(grid.w_max, grid.w_points)
    if scenario.flat_rate:
        _, revenue = _participation(w_axis, params, scenario, grid)
        cp_axis, cp_index = np.empty(0), np.zeros(w_axis.size, dtype=int)
    else:
        cp_axis = _axis(grid.cp_max, grid.cp_points)
        values = _finite(_power_revenue(cp_axis[None, :], w_axis[:, None], params, scenario, grid))
        cp_index = _first_best(values)
        revenue = _pick(values, cp_index)
        if grid.cp_points > 1:
            lo, hi = _neighbors(cp_axis, cp_index)
            _, revenue = _zoom(
                lambda cps: _power_revenue(cps, w_axis[:, None], params, scenario, grid),
                lo, hi, cp_axis[cp_index], revenue, grid.rtol, grid.refine,
            )

    for array in (w_axis, cp_axis, revenue, cp_index):
        array.setflags(write=False)
    logger.debug(f'Revenue table built for {scenario.label} on {w_axis.size} bandwidth points')
    return RevenueTable(w_axis=w_axis, cp_axis=cp_axis, revenue=revenue, cp_index=cp_index)


def _nearest_coarse(w, axis):
    if axis.size == 1:
        return np.zeros(np.shape(w), dtype=int)
    spacing = math.log(axis[1] / axis[0])
    index = np.rint((np.log(w) - math.log(axis[0])) / spacing).astype(int)
    return np.clip(index, 0, axis.size - 1)


def _leftmost_within(evaluate, lo, x, v, rtol):
    """
    Smallest point in [lo, x] whose value is within rtol of v, by bisection in log space.

    Assumes the values left of that point fall below the threshold.
    """
    x = np.asarray(x, dtype=float)
    threshold = v - rtol * np.abs(v)
    lo_log = np.full(x.shape, math.log(lo))
    hi_log = np.log(np.maximum(x, lo))
    for _ in range(PLATEAU_BISECTIONS):
        mid = 0.5 * (lo_log + hi_log)
        inside = _finite(evaluate(np.exp(mid))) >= threshold
        hi_log = np.where(inside, mid, hi_log)
        lo_log = np.where(inside, lo_log, mid)
    return np.where(np.isfinite(v) & (x > lo), np.exp(hi_log), x)


def _best_tariff(w, table, params, scenario, grid, lowest=False):
    """
    Revenue-maximizing C_P for arbitrary bandwidths, warm-started from the table.

    With lowest=True a revenue plateau resolves to its smallest tariff; the
    revenue itself is the same either way.

    Returns:
        Tuple of (c_p, revenue) arrays shaped like w
    """
    w = np.asarray(w, dtype=float)
    if scenario.flat_rate:
        return _participation(w, params, scenario, grid)
    if grid.cp_points == 1:
        c_p = np.full(w.shape, table.cp_axis[0])
        return c_p, _finite(_power_revenue(c_p, w, params, scenario, grid))

    coarse = table.cp_index[_nearest_coarse(w, table.w_axis)]
    lo, hi = _neighbors(table.cp_axis, coarse, TARIFF_WINDOW)
    c_p, revenue = _zoom(
        lambda cps: _power_revenue(cps, w[..., None], params, scenario, grid),
        lo, hi, hi, np.full(w.shape, -np.inf), grid.rtol, grid.refine,
    )
    if not lowest:
        return c_p, revenue
    # revenue is flat in C_P once users back off from full power (high SNR)
    c_p = _leftmost_within(
        lambda cps: _power_revenue(cps, w, params, scenario, grid),
        table.cp_axis[0], c_p, revenue, max(math.sqrt(grid.rtol), PLATEAU_FLOOR),
    )
    return c_p, revenue


def _provider_batch(c_w, params, scenario, grid):
    """
    Provider best responses for a batch of owner tariffs.

    Returns:
        Tuple of (w, c_p, v_p, t) arrays; exits are reported as all zeros
    """
    c_w = np.atleast_1d(np.asarray(c_w, dtype=float))
    table = revenue_table(params, scenario, grid)
    values = table.revenue[None, :] - c_w[:, None] * table.w_axis[None, :]
    k = _first_best(values)
    w, v = table.w_axis[k], _pick(values, k)

    if grid.w_points > 1:
        lo, hi = _neighbors(table.w_axis, k)
        w, v = _zoom(
            lambda ws: _best_tariff(ws, table, params, scenario, grid)[1] - c_w[:, None] * ws,
            lo, hi, w, v, math.sqrt(grid.rtol), grid.refine,
        )

    c_p, revenue = _best_tariff(w, table, params, scenario, grid, lowest=True)
    t = equilibrium_power(np.zeros_like(w) if scenario.flat_rate else c_p, w, params, scenario, grid)
    v_p = revenue - c_w * w
    leases = v_p > 0
    return (
        np.where(leases, w, 0.0),
        np.where(leases, c_p, 0.0),
        np.where(leases, v_p, 0.0),
        np.where(leases, t, 0.0),
    )


def grid_provider(c_w, params, scenario, grid):
    """
    Provider's best lease and tariff by exhaustive search.

    Args:
        c_w: Owner tariff
        params: MarketParams
        scenario: Scenario
        grid: GridSpec

    Returns:
        ProviderDecision; W = C_P = v_P = t = 0 when no lease is profitable
    """
    validate(params, scenario)
    validate_grid(grid)
    w, c_p, v_p, t = (float(array[0]) for array in _provider_batch([c_w], params, scenario, grid))
    return ProviderDecision(w=w, c_p=c_p, v_p=v_p, t=t)


def _coarse_leases(cw_axis, table):
    """Lease per coarse C_W from the revenue table, with a parabolic vertex in log W."""
    values = table.revenue[None, :] - cw_axis[:, None] * table.w_axis[None, :]
    k = _first_best(values)
    best = _pick(values, k)
    lease = table.w_axis[k]
    size = table.w_axis.size
    if size < 3:
        return np.where(best > 0, lease, 0.0)

    inner = np.clip(k, 1, size - 2)
    left, mid, right = (_pick(values, inner + shift) for shift in (-1, 0, 1))
    curvature = left - 2 * mid + right
    offset = np.divide(0.5 * (left - right), curvature, out=np.zeros_like(mid), where=curvature < 0)
    spacing = math.log(table.w_axis[1] / table.w_axis[0])
    vertex = np.exp(np.log(table.w_axis[inner]) + np.clip(offset, -1.0, 1.0) * spacing)
    lease = np.where((k > 0) & (k < size - 1), vertex, lease)
    return np.where(best > 0, lease, 0.0)


def _owner_tariff(params, scenario, grid):
    table = revenue_table(params, scenario, grid)
    cw_axis = _axis(grid.cw_max, grid.cw_points)
    profit = cw_axis * _coarse_leases(cw_axis, table)
    j = int(_first_best(profit))
    if grid.cw_points == 1:
        return float(cw_axis[0])

    lo, hi = _neighbors(cw_axis, np.array(j), OWNER_WINDOW)

    def owner_value(cws):
        leases = _provider_batch(cws.ravel(), params, scenario, grid)[0]
        return (cws.ravel() * leases).reshape(cws.shape)

    c_w, v_a = _zoom(owner_value, lo, hi, cw_axis[j], -np.inf, grid.rtol ** 0.25, grid.refine)
    logger.debug(f'Oracle owner tariff {float(c_w):.8g} with revenue {float(v_a):.8g}')
    return float(c_w)


def grid_solve(params, scenario, grid):
    """
    Full equilibrium by nested grid search.

    Returns:
        EquilibriumSolution with method=ORACLE
    """
    validate(params, scenario)
    validate_grid(grid)
    c_w = _owner_tariff(params, scenario, grid)
    w, c_p, v_p, t = (float(array[0]) for array in _provider_batch([c_w], params, scenario, grid))

    if w > 0:
        utility, rate = usergame.equilibrium_metrics(t, c_p, w, params, scenario)
        ratio = float(usergame.snr(t, w, params, scenario.model))
    else:
        utility, rate, ratio = 0.0, 0.0, 0.0
    solution = EquilibriumSolution(
        c_w=c_w, w=w, c_p=c_p, t=t, v_p=v_p, v_a=c_w * w,
        u_user=utility, throughput=rate, snr=ratio, method=Method.ORACLE,
    )
    logger.info(
        f'Oracle solved {scenario.label}: c_w={c_w:.6g} w={w:.6g} c_p={c_p:.6g} '
        f'v_p={v_p:.6g} v_a={solution.v_a:.6g}'
    )
    return solution


def _actual_provider_profit(solution, params, scenario, grid):
    if solution.w <= 0:
        return 0.0
    t = float(equilibrium_power(
        0.0 if scenario.flat_rate else solution.c_p, solution.w, params, scenario, grid,
    ))
    if scenario.flat_rate:
        rate = float(usergame.throughput(t, t, solution.w, params, scenario))
        subscribers = params.n if solution.c_p <= rate * (1 + PARTICIPATION_SLACK) else 0
        return subscribers * solution.c_p - solution.c_w * solution.w
    return solution.c_p * params.n * t - solution.c_w * solution.w


def deviation_check(solution, params, scenario, grid):
    """
    Largest unilateral deviation gains against a candidate equilibrium.

    A single user scans its power over the whole admissible range (and may
    opt out under flat rate); the provider re-optimizes (W, C_P) on the grid
    at the candidate's owner tariff.

    Returns:
        DeviationReport
    """
    if solution.w > 0:
        t_lo = _power_floor(params, scenario)
        powers = np.linspace(t_lo, params.t_bar, DEVIATION_POINTS)
        payoffs = _finite(usergame.user_payoff(
            powers, solution.t, solution.c_p, solution.w, params, scenario,
        ))
        current = float(usergame.user_payoff(
            max(solution.t, t_lo), solution.t, solution.c_p, solution.w, params, scenario,
        ))
        k = int(np.argmax(payoffs))
        best_power, best_payoff = float(powers[k]), float(payoffs[k])
        if scenario.flat_rate and best_payoff < 0:
            best_power, best_payoff = 0.0, 0.0
        user_gain = max(0.0, best_payoff - current)
    else:
        current, best_power, user_gain = 0.0, 0.0, 0.0

    actual = _actual_provider_profit(solution, params, scenario, grid)
    best = grid_provider(solution.c_w, params, scenario, grid)
    provider_gain = max(0.0, best.v_p - actual)

    report = DeviationReport(
        user_gain=user_gain,
        provider_gain=provider_gain,
        user_gain_relative=user_gain / (1 + abs(current)),
        provider_gain_relative=provider_gain / max(abs(actual), TINY),
        best_user_power=best_power,
        best_provider=best,
    )
    logger.info(
        f'Deviation check {scenario.label}: user gain {user_gain:.3g}, provider gain {provider_gain:.3g}'
    )
    return report


def compare_solutions(reference, candidate, tolerance):
    """
    Component-wise comparison rows.

    Profits are compared relative to the reference's total profit, so an
    owner that captures nearly everything does not magnify the provider's
    small residual.

    Returns:
        List of dicts with component, reference, candidate, error, tolerance, passed
    """
    total = abs(reference.v_p + reference.v_a)
    rows = []
    for name in COMPONENTS:
        expected, actual = getattr(reference, name), getattr(candidate, name)
        if name in ('v_p', 'v_a'):
            error = abs(expected - actual) / max(total, abs(expected), abs(actual), 1e-12)
        else:
            error = relative_difference(expected, actual)
        rows.append({
            'component': name,
            'reference': expected,
            'candidate': actual,
            'error': error,
            'tolerance': tolerance,
            'passed': bool(error <= tolerance),
        })
    return rows


def grid_from_config(config, params, scenario, overrides=None):
    """
    Default grid at the resolution set in an app config mapping.

    Args:
        config: Mapping with ORACLE_GRID_POINTS, ORACLE_REFINE, ORACLE_RTOL, BR_TOL, BR_MAX_ITER
        overrides: Optional {GridSpec field: value} applied last

    Returns:
        Validated GridSpec
    """
    grid = default_grid(
        params, scenario,
        points=config['ORACLE_GRID_POINTS'],
        refine=config['ORACLE_REFINE'],
        rtol=config['ORACLE_RTOL'],
        br_tol=config['BR_TOL'],
        br_max_iter=config['BR_MAX_ITER'],
    )
    if overrides:
        grid = grid.with_overrides(overrides)
    return validate_grid(grid)

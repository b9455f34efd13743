"""
Tests for the provider and owner layers and the three-level solve.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from app.models.market import MarketParams, Method, Scenario
from app.services.chain import (
    RootVariant,
    full_power_tariff,
    lease_upper_bound,
    owner_best_tariff,
    provider_best_bandwidth,
    provider_payoff,
    ratio_report,
    scaled_coefficients,
    solve_both,
    solve_equilibrium,
    tariff_upper_bound,
)
from app.services.special import w0
from app.services.usergame import nash_equilibrium
from app.utils.errors import DomainError, InfeasibleTariff, InvalidParam

FLAT_FREE_GENERAL = {'c_w': 0.468, 'w': 0.462, 'c_p': 0.532, 't': 1.0, 'v_p': 0.316, 'v_a': 0.216}
FLAT_FREE_HIGH = {'c_w': 1.0, 'w': 0.135, 'c_p': 0.271, 't': 1.0, 'v_p': 0.135, 'v_a': 0.135}
POWER_FREE_GENERAL = {'c_w': 0.25, 'w': 1.0, 'c_p': 0.5, 't': 1.0, 'v_p': 0.25, 'v_a': 0.25}


def _random_market(rng):
    n = int(rng.integers(2, 20))
    return MarketParams(
        n=n,
        L=float(rng.uniform(2 * n + 1, 120.0)),
        h=float(rng.uniform(0.5, 2.0)),
        t_bar=float(rng.uniform(0.5, 2.0)),
        sigma2=float(rng.uniform(0.5, 2.0)),
    )


def _assert_coefficients(solution, params, scenario, expected, abs_tol):
    coefficients = scaled_coefficients(solution, params, scenario)
    for name, value in expected.items():
        assert coefficients[name] == pytest.approx(value, abs=abs_tol), name


pytestmark = pytest.mark.unit


class TestWorkedExamples:
    """Closed-form equilibria on the worked examples."""

    def test_power_free_small_market(self, table1_params, pb_if_general):
        """n=10, L=2 unit market: C_W=1/4, W=20, C_P=1, full power, equal profits 5."""
        solution = solve_equilibrium(table1_params, pb_if_general)
        assert solution.c_w == pytest.approx(0.25, abs=1e-10)
        assert solution.w == pytest.approx(20.0, abs=1e-10)
        assert solution.c_p == pytest.approx(1.0, abs=1e-10)
        assert solution.t == pytest.approx(1.0, abs=1e-10)
        assert solution.v_p == pytest.approx(5.0, abs=1e-10)
        assert solution.v_a == pytest.approx(5.0, abs=1e-10)
        assert solution.snr == pytest.approx(1.0)
        assert solution.method is Method.CLOSED_FORM

    def test_power_interference_sweep_point(self, fig1_params, pb_int_general):
        """n=40, L=400, T̄=0.5, σ²=10: C_W=16000/1756, W=21.95, C_P=20, profits 200."""
        solution = solve_equilibrium(fig1_params, pb_int_general)
        assert solution.c_w == pytest.approx(16000 / 1756, rel=1e-12)
        assert solution.c_w == pytest.approx(9.1116, abs=1e-4)
        assert solution.w == pytest.approx(21.95, rel=1e-12)
        assert solution.c_p == pytest.approx(20.0, rel=1e-12)
        assert solution.t == pytest.approx(0.5)
        assert solution.v_p == pytest.approx(200.0, rel=1e-10)
        assert solution.v_a == pytest.approx(200.0, rel=1e-10)

    @pytest.mark.parametrize('params', [
        MarketParams(n=10, L=2.0, h=1.0, t_bar=1.0, sigma2=1.0),
        MarketParams(n=3, L=7.5, h=0.8, t_bar=2.0, sigma2=0.5),
        MarketParams(n=40, L=400.0, h=1.0, t_bar=0.5, sigma2=10.0),
    ])
    def test_flat_free_coefficients(self, params, fr_if_general, fr_if_high, pb_if_general):
        """Scaled coefficients do not depend on the market constants."""
        _assert_coefficients(solve_equilibrium(params, fr_if_general), params, fr_if_general,
                             FLAT_FREE_GENERAL, 1e-3)
        _assert_coefficients(solve_equilibrium(params, fr_if_high), params, fr_if_high,
                             FLAT_FREE_HIGH, 1e-3)
        _assert_coefficients(solve_equilibrium(params, pb_if_general), params, pb_if_general,
                             POWER_FREE_GENERAL, 1e-12)

    def test_flat_free_tariff_root(self, table1_params, fr_if_general):
        """The owner tariff solves c = (1 + W0(-e^(-1-c)))²."""
        c_w = solve_equilibrium(table1_params, fr_if_general).c_w
        assert c_w == pytest.approx((1 + w0(-math.exp(-1 - c_w))) ** 2, abs=1e-10)

    def test_power_high_snr(self, table1_params, pb_if_high, pb_int_high):
        """Owner undercuts the exit tariff by ε; the provider keeps εW̄."""
        p = replace(table1_params, w_bar=10.0, epsilon=1e-3)
        free = solve_equilibrium(p, pb_if_high)
        assert free.c_w == pytest.approx(1 - 1e-3)
        assert free.w == pytest.approx(10.0)
        assert free.c_p == pytest.approx(10.0 / (p.n * p.t_bar))
        assert free.v_p == pytest.approx(1e-2)
        assert free.v_a == pytest.approx((1 - 1e-3) * 10.0)

        shared = solve_equilibrium(p, pb_int_high)
        assert shared.c_w == pytest.approx(p.n - 1e-3)
        assert shared.c_p == pytest.approx(10.0 / p.t_bar)
        assert shared.v_p == pytest.approx(1e-2)
        assert shared.v_a == pytest.approx((p.n - 1e-3) * 10.0)


class TestPowerInterferenceTable:
    """Power-based interference equilibrium on random markets."""

    def test_formulas(self, pb_int_general):
        """W=(n+L-1)hT̄/σ², C_P=Lh/(2σ²), t=T̄, profits nLhT̄/(4σ²)."""
        rng = np.random.default_rng(42)
        for _ in range(100):
            p = _random_market(rng)
            solution = solve_equilibrium(p, pb_int_general)
            k = p.n + p.L - 1
            assert solution.c_w == pytest.approx(p.n * p.L / (4 * k), rel=1e-12)
            assert solution.w == pytest.approx(k * p.h * p.t_bar / p.sigma2, rel=1e-12)
            assert solution.c_p == pytest.approx(p.L * p.h / (2 * p.sigma2), rel=1e-12)
            assert solution.t == pytest.approx(p.t_bar, rel=1e-12)
            assert solution.v_p == pytest.approx(p.scale / 4, rel=1e-10)
            assert solution.v_a == pytest.approx(p.scale / 4, rel=1e-10)

    def test_numerical_matches_formulas(self, pb_int_general):
        """Numerical composition lands on the same tuple."""
        rng = np.random.default_rng(43)
        for _ in range(10):
            p = _random_market(rng)
            result = solve_both(p, pb_int_general)
            assert result['discrepancy'] <= 1e-6


class TestProviderLayer:
    """Test the provider's best bandwidth."""

    def test_small_market(self, table1_params, pb_if_general):
        """At C_W=1/4 the provider leases 20 and charges 1."""
        decision = provider_best_bandwidth(0.25, table1_params, pb_if_general)
        assert decision.w == pytest.approx(20.0)
        assert decision.c_p == pytest.approx(1.0)
        assert decision.v_p == pytest.approx(5.0)
        assert decision.t == pytest.approx(1.0)

    def test_numerical_matches_closed(self, interference_params):
        """Both provider paths agree across tariffs."""
        p = interference_params
        for scenario in Scenario.all():
            hi = tariff_upper_bound(p, scenario)
            for fraction in (0.2, 0.5, 0.8):
                c_w = fraction * min(hi, 4.0)
                closed = provider_best_bandwidth(c_w, p, scenario)
                numerical = provider_best_bandwidth(c_w, p, scenario, Method.NUMERICAL)
                assert numerical.w == pytest.approx(closed.w, rel=1e-6), scenario.label
                assert numerical.v_p == pytest.approx(closed.v_p, rel=1e-6, abs=1e-9), scenario.label

    def test_lease_decreases_with_tariff(self, fig1_params, pb_int_general):
        leases = [provider_best_bandwidth(c, fig1_params, pb_int_general).w for c in (1.0, 5.0, 20.0)]
        assert leases[0] > leases[1] > leases[2] > 0

    def test_exit_tariff(self, table1_params, pb_if_general):
        """The provider leases nothing at C_W ≥ 1."""
        assert lease_upper_bound(1.0, table1_params, pb_if_general) == 0.0
        with pytest.raises(InfeasibleTariff) as exc_info:
            provider_best_bandwidth(1.0, table1_params, pb_if_general)
        assert exc_info.value.c_w == 1.0

    def test_flat_interference_exit(self, interference_params, fr_int_general):
        """Above n·ln(1+L/(n-1)) the flat-rate provider exits."""
        hi = tariff_upper_bound(interference_params, fr_int_general)
        assert hi == pytest.approx(4 * math.log1p(10 / 3))
        with pytest.raises(InfeasibleTariff):
            provider_best_bandwidth(1.01 * hi, interference_params, fr_int_general)

    def test_zero_tariff_unbounded(self, table1_params, pb_if_general):
        with pytest.raises(DomainError):
            provider_best_bandwidth(0.0, table1_params, pb_if_general)

    def test_negative_tariff(self, table1_params, pb_if_general):
        with pytest.raises(DomainError):
            lease_upper_bound(-0.1, table1_params, pb_if_general)

    def test_full_power_tariff_flat(self, table1_params, fr_if_general):
        """The flat tariff equals the users' full-power rate."""
        assert full_power_tariff(20.0, table1_params, fr_if_general) == pytest.approx(2 * math.log(2))


class TestOwnerLayer:
    """Test the owner's tariff choice."""

    def test_owner_decision(self, table1_params, pb_if_general):
        owner = owner_best_tariff(table1_params, pb_if_general)
        assert owner.c_w == pytest.approx(0.25)
        assert owner.w == pytest.approx(20.0)
        assert owner.v_a == pytest.approx(5.0)

    def test_numerical_owner(self, table1_params, fr_if_general):
        """Maximizing c·W(c) reproduces the root of the owner's condition."""
        closed = owner_best_tariff(table1_params, fr_if_general)
        numerical = owner_best_tariff(table1_params, fr_if_general, Method.NUMERICAL)
        assert numerical.c_w == pytest.approx(closed.c_w, rel=1e-6)
        assert numerical.v_a == pytest.approx(closed.v_a, rel=1e-9)

    def test_invalid_instance(self, table1_params, fr_int_general):
        with pytest.raises(InvalidParam):
            owner_best_tariff(replace(table1_params, n=1), fr_int_general)

    def test_table_root(self, interference_params, fr_int_high):
        """The default root satisfies n·W0(((n-1)/L)e^((n+c)/n))² + c = n."""
        p = interference_params
        c_w = owner_best_tariff(p, fr_int_high).c_w
        branch = w0((p.n - 1) / p.L * math.exp((p.n + c_w) / p.n))
        assert p.n * branch ** 2 + c_w - p.n == pytest.approx(0.0, abs=1e-9)

    def test_appendix_root(self, interference_params, fr_int_high):
        """The alternative root satisfies W0(...)² = 1 - c and earns no more."""
        p = interference_params
        table = owner_best_tariff(p, fr_int_high, root_variant=RootVariant.TABLE)
        appendix = owner_best_tariff(p, fr_int_high, root_variant=RootVariant.APPENDIX)
        branch = w0((p.n - 1) / p.L * math.exp((p.n + appendix.c_w) / p.n))
        assert 0 < appendix.c_w < 1
        assert branch ** 2 == pytest.approx(1 - appendix.c_w, abs=1e-9)
        assert appendix.c_w != pytest.approx(table.c_w)
        assert table.v_a >= appendix.v_a

    def test_table_root_is_revenue_maximizer(self, interference_params, fr_int_high):
        """Neighbouring tariffs earn less than the default root."""
        p = interference_params
        best = owner_best_tariff(p, fr_int_high)
        for c_w in (0.95 * best.c_w, 1.05 * best.c_w):
            lease = provider_best_bandwidth(c_w, p, fr_int_high).w
            assert c_w * lease < best.v_a

    def test_weak_signal_high_snr_infeasible(self, table1_params, fr_int_high):
        """With L ≤ n-1 no flat-rate high-SNR interference tariff earns revenue."""
        assert tariff_upper_bound(table1_params, fr_int_high) == 0.0
        with pytest.raises(InfeasibleTariff):
            solve_equilibrium(table1_params, fr_int_high)

    def test_single_user_high_snr(self, table1_params, fr_int_high):
        """One user: tariff 1 and lease LhT̄/(σ²e²)."""
        p = replace(table1_params, n=1)
        owner = owner_best_tariff(p, fr_int_high)
        assert owner.c_w == 1.0
        assert owner.w == pytest.approx(p.L * math.exp(-2.0))


class TestSolveBoth:
    """Closed form and numerical composition agree."""

    def test_all_scenarios(self, interference_params):
        for scenario in Scenario.all():
            result = solve_both(interference_params, scenario)
            assert result['discrepancy'] <= 1e-6, scenario.label
            assert result['numerical']['method'] == 'numerical'

    @pytest.mark.slow
    def test_random_markets(self):
        """Fifty random markets, every scenario, to 1e-6."""
        rng = np.random.default_rng(1234)
        for _ in range(50):
            p = _random_market(rng)
            for scenario in Scenario.all():
                result = solve_both(p, scenario)
                assert result['discrepancy'] <= 1e-6, (scenario.label, p)


class TestRatios:
    """Cross-regime and cross-scheme ratios."""

    def test_within_one_percent(self, table1_params):
        report = ratio_report(table1_params)
        assert report.within(1e-2)
        assert report['c_w flat/power'].computed == pytest.approx(1.87, abs=2e-3)
        assert report['v_p/v_a flat'].computed == pytest.approx(1.462, abs=2e-3)

    def test_independent_of_market(self, table1_params, fig1_params):
        """Ratios of scaled coefficients do not move with the constants."""
        first = ratio_report(table1_params)
        second = ratio_report(fig1_params)
        for entry in first.entries:
            assert second[entry.name].computed == pytest.approx(entry.computed, rel=1e-8)


def _provider_value(w, c_w, params, scenario):
    """Provider profit at lease w under its own tariff rule and the users' equilibrium."""
    c_p = full_power_tariff(w, params, scenario)
    t = nash_equilibrium(c_p, w, params, scenario).t
    return provider_payoff(c_p, w, c_w, t, params, scenario)


def _owner_revenue(c_w, params, scenario):
    try:
        return c_w * provider_best_bandwidth(c_w, params, scenario).w
    except InfeasibleTariff:
        return 0.0


INTERIOR_LEASES = ['FR-IF-G', 'PB-IF-G', 'FR-INT-G', 'PB-INT-G', 'FR-IF-H', 'FR-INT-H']


class TestOptimality:
    """First- and second-level optimality of the returned decisions."""

    @pytest.mark.parametrize('label', INTERIOR_LEASES)
    def test_provider_first_order_condition(self, interference_params, label):
        """The provider's profit is flat in W at its chosen lease."""
        p = interference_params
        scenario = next(s for s in Scenario.all() if s.label == label)
        owner = owner_best_tariff(p, scenario)
        decision = provider_best_bandwidth(owner.c_w, p, scenario)
        step = 1e-4 * decision.w
        slope = (_provider_value(decision.w + step, owner.c_w, p, scenario)
                 - _provider_value(decision.w - step, owner.c_w, p, scenario)) / (2 * step)
        assert abs(slope) <= 1e-6 * (1 + abs(decision.v_p) / decision.w)

    @pytest.mark.slow
    @pytest.mark.parametrize('scenario', Scenario.all(), ids=lambda s: s.label)
    def test_owner_beats_tariff_grid(self, interference_params, scenario):
        """No tariff on a 1000-point grid earns the owner more."""
        p = interference_params
        owner = owner_best_tariff(p, scenario)
        upper = tariff_upper_bound(p, scenario)
        grid = np.linspace(upper / 1000, upper, 1000)
        best_on_grid = max(_owner_revenue(float(c_w), p, scenario) for c_w in grid)
        assert best_on_grid <= owner.v_a * (1 + 1e-6)


@pytest.mark.slow
class TestFlatRateDominance:
    """The provider earns more under flat-rate pricing."""

    @pytest.mark.parametrize('model', ['free', 'interference'])
    def test_random_markets(self, model):
        rng = np.random.default_rng(77)
        flat = Scenario.of('flat', model, 'general')
        power = Scenario.of('power', model, 'general')
        for _ in range(100):
            p = _random_market(rng)
            assert solve_equilibrium(p, flat).v_p > solve_equilibrium(p, power).v_p, p

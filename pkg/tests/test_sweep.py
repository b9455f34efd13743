"""
Tests for parameter sweeps and their CSV output.
"""
import io
import logging
import os

import pandas as pd
import pytest

from app.models.grid import SweepSpec
from app.models.market import ChannelModel, MarketParams, PricingScheme, SnrRegime
from app.services.sweep import (
    CSV_COLUMNS,
    PRESETS,
    get_preset,
    run_preset,
    run_sweep,
    to_frame,
    write_csv,
)
from app.utils.errors import InvalidParam

HEADER = 'var,value,scheme,model,regime,c_w,w,c_p,t,v_p,v_a,u_user,throughput'


def _by_scheme(rows, scheme):
    return [row for row in rows if row['scheme'] == scheme]


@pytest.fixture(scope='module')
def user_sweep():
    return run_preset('fig1', threads=2)


@pytest.fixture(scope='module')
def power_sweep():
    return run_preset('fig2', threads=2)


pytestmark = pytest.mark.unit


class TestRunSweep:
    """Small sweeps."""

    @pytest.fixture
    def base(self):
        return MarketParams(n=10, L=20.0, h=1.0, t_bar=1.0, sigma2=1.0)

    def test_rows_in_order(self, base):
        """One row per (point, scheme), points outermost."""
        rows = run_sweep(base, SweepSpec('n', 2, 4, 3), [PricingScheme.FLAT_RATE, PricingScheme.POWER_BASED],
                         threads=2)
        assert [(row['value'], row['scheme']) for row in rows] == [
            (2, 'flat'), (2, 'power'), (3, 'flat'), (3, 'power'), (4, 'flat'), (4, 'power'),
        ]
        assert all(row['model'] == 'interference' and row['regime'] == 'general' for row in rows)
        assert list(rows[0]) == CSV_COLUMNS

    def test_single_step(self, base):
        """steps=1 solves the start value only."""
        rows = run_sweep(base, SweepSpec('L', 30.0, 60.0, 1), ['power'], model='free', threads=1)
        assert len(rows) == 1
        assert rows[0]['value'] == 30.0
        assert rows[0]['c_w'] == pytest.approx(0.25)

    def test_requires_scheme(self, base):
        with pytest.raises(InvalidParam) as exc_info:
            run_sweep(base, SweepSpec('n', 2, 4, 3), [])
        assert exc_info.value.field == 'scheme'

    def test_invalid_point_propagates(self, base):
        """A sweep through n=1 under flat-rate interference is rejected."""
        with pytest.raises(InvalidParam):
            run_sweep(base, SweepSpec('n', 1, 3, 3), ['flat'], threads=1)

    def test_high_snr_sweep(self, base):
        rows = run_sweep(base, SweepSpec('tbar', 0.5, 1.5, 3), ['power'],
                         model=ChannelModel.INTERFERENCE, regime=SnrRegime.HIGH_SNR, threads=2)
        assert [row['c_w'] for row in rows] == pytest.approx([10 - 1e-3] * 3)


class TestPresets:
    """Preset lookup."""

    def test_known(self):
        assert get_preset('fig1') is PRESETS['fig1']
        assert PRESETS['fig2'].spec.variable == 'tbar'

    def test_unknown(self):
        with pytest.raises(InvalidParam) as exc_info:
            get_preset('fig9')
        assert exc_info.value.field == 'preset'

    def test_threads_default_to_cpu_count(self, caplog, monkeypatch):
        """Without a cap the pool uses one worker per CPU."""
        monkeypatch.setattr(os, 'cpu_count', lambda: 3)
        with caplog.at_level(logging.INFO, logger='app.services.sweep'):
            run_sweep(MarketParams(n=10, L=20.0, h=1.0, t_bar=1.0, sigma2=1.0), SweepSpec('n', 2, 4, 3), ['power'])
        assert 'with 3 workers' in caplog.text


@pytest.mark.slow
class TestUserSweep:
    """Sweep over the number of users at T̄=0.5."""

    def test_shape(self, user_sweep):
        assert len(user_sweep) == 2 * 99
        assert [row['value'] for row in _by_scheme(user_sweep, 'power')] == list(range(2, 101))

    def test_power_tariff_constant(self, user_sweep):
        """C_P = Lh/(2σ²) = 20 for every n."""
        for row in _by_scheme(user_sweep, 'power'):
            assert row['c_p'] == pytest.approx(20.0, rel=1e-12)

    def test_power_profits_split_evenly(self, user_sweep):
        for row in _by_scheme(user_sweep, 'power'):
            assert row['v_a'] == pytest.approx(row['v_p'], rel=1e-10)

    def test_flat_provider_earns_more(self, user_sweep):
        """Flat-rate pricing leaves the provider more than power-based pricing."""
        for flat, power in zip(_by_scheme(user_sweep, 'flat'), _by_scheme(user_sweep, 'power')):
            assert flat['value'] == power['value']
            assert flat['v_p'] > power['v_p']

    def test_power_owner_tariff_rises(self, user_sweep):
        """C_W grows with n and stays below L/4."""
        tariffs = [row['c_w'] for row in _by_scheme(user_sweep, 'power')]
        assert all(b > a for a, b in zip(tariffs, tariffs[1:]))
        assert tariffs[-1] < 100.0

    def test_bandwidth_rises(self, user_sweep):
        power = [row['w'] for row in _by_scheme(user_sweep, 'power')]
        flat = [row['w'] for row in _by_scheme(user_sweep, 'flat')]
        assert all(b > a for a, b in zip(power, power[1:]))
        assert flat[-1] > flat[0]

    def test_csv(self, user_sweep):
        """Header and 12 significant digits."""
        text = write_csv(user_sweep)
        lines = text.split('\n')
        assert lines[0] == HEADER
        assert len(lines) == 1 + 2 * 99 + 1
        assert lines[-1] == ''
        row_40 = next(line for line in lines if line.startswith('n,40,power,'))
        assert ',9.11161731207,21.95,20,0.5,200,200,' in row_40


@pytest.mark.slow
class TestPowerSweep:
    """Sweep over T̄ at n=40."""

    def test_shape(self, power_sweep):
        assert len(power_sweep) == 2 * 40
        values = [row['value'] for row in _by_scheme(power_sweep, 'flat')]
        assert values[0] == pytest.approx(0.05)
        assert values[-1] == pytest.approx(2.0)

    def test_bandwidth_rises(self, power_sweep):
        for scheme in ('flat', 'power'):
            leases = [row['w'] for row in _by_scheme(power_sweep, scheme)]
            assert all(b > a for a, b in zip(leases, leases[1:])), scheme

    def test_flat_owner_tariff_constant(self, power_sweep):
        """T̄ only rescales the flat-rate market, so the owner tariff stays put."""
        tariffs = [row['c_w'] for row in _by_scheme(power_sweep, 'flat')]
        assert max(tariffs) == pytest.approx(min(tariffs), rel=1e-6)

    def test_power_profits_scale_with_power(self, power_sweep):
        """Power-based profits are nLhT̄/(4σ²) = 400·T̄."""
        for row in _by_scheme(power_sweep, 'power'):
            assert row['v_p'] == pytest.approx(400.0 * row['value'], rel=1e-10)


class TestWriteCsv:
    """CSV writer."""

    def test_to_stream(self):
        rows = run_sweep(MarketParams(n=10, L=2.0, h=1.0, t_bar=1.0, sigma2=1.0),
                         SweepSpec('h', 1.0, 1.0, 1), ['power'], model='free', threads=1)
        buffer = io.StringIO()
        assert write_csv(rows, buffer) is None
        frame = pd.read_csv(io.StringIO(buffer.getvalue()))
        assert list(frame.columns) == CSV_COLUMNS
        assert frame.loc[0, 'w'] == pytest.approx(20.0)
        assert frame.loc[0, 'v_a'] == pytest.approx(5.0)

    def test_empty_frame_keeps_columns(self):
        assert write_csv([]) == HEADER + '\n'
        assert list(to_frame([]).columns) == CSV_COLUMNS

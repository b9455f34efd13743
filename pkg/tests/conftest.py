"""
Test configuration and fixtures for the spectrum market solver.
"""
import pytest
import os

from app import create_app
from app.models.market import MarketParams, Scenario


@pytest.fixture(scope='function')
def app():
    """Create and configure a test application instance."""
    test_env = {
        'SECRET_KEY': 'test-secret',
    }

    for key, value in test_env.items():
        os.environ[key] = value

    _app = create_app('testing')

    with _app.app_context():
        yield _app

    for key in test_env.keys():
        os.environ.pop(key, None)


@pytest.fixture
def client(app):
    """Create a test client for the app."""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create a test CLI runner for the app."""
    return app.test_cli_runner()


@pytest.fixture
def table1_params():
    """Small interference-free market (n=10, L=2, h=1, T̄=1, σ²=1)."""
    return MarketParams(n=10, L=2.0, h=1.0, t_bar=1.0, sigma2=1.0)


@pytest.fixture
def fig1_params():
    """Market behind the n and T̄ sweeps (L=400, h=1, T̄=0.5, σ²=10) at n=40."""
    return MarketParams(n=40, L=400.0, h=1.0, t_bar=0.5, sigma2=10.0)


@pytest.fixture
def interference_params():
    """Moderate interference market used by the oracle suite."""
    return MarketParams(n=4, L=10.0, h=1.0, t_bar=1.0, sigma2=1.0)


@pytest.fixture
def pb_if_general():
    return Scenario.of('power', 'free', 'general')


@pytest.fixture
def pb_int_general():
    return Scenario.of('power', 'interference', 'general')


@pytest.fixture
def fr_if_general():
    return Scenario.of('flat', 'free', 'general')


@pytest.fixture
def fr_int_general():
    return Scenario.of('flat', 'interference', 'general')


@pytest.fixture
def fr_if_high():
    return Scenario.of('flat', 'free', 'high-snr')


@pytest.fixture
def fr_int_high():
    return Scenario.of('flat', 'interference', 'high-snr')


@pytest.fixture
def pb_if_high():
    return Scenario.of('power', 'free', 'high-snr')


@pytest.fixture
def pb_int_high():
    return Scenario.of('power', 'interference', 'high-snr')

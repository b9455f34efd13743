"""
Application configuration.
"""
import os

from app.models.grid import (
    DEFAULT_BR_MAX_ITER,
    DEFAULT_BR_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINE,
    DEFAULT_RTOL,
)
from app.models.market import DEFAULT_EPSILON


class BaseConfig:
    """Base configuration."""

    # Flask
    SECRET_KEY = os.getenv('SECRET_KEY', 'dev-secret-key-change-in-production')
    JSON_SORT_KEYS = False

    # Solver
    SPECTRUM_TIER_THREADS = int(os.getenv('SPECTRUM_TIER_THREADS', os.cpu_count() or 1))
    SPECTRUM_TIER_EPSILON = float(os.getenv('SPECTRUM_TIER_EPSILON', DEFAULT_EPSILON))

    # Oracle
    ORACLE_GRID_POINTS = int(os.getenv('ORACLE_GRID_POINTS', DEFAULT_GRID_POINTS))
    ORACLE_REFINE = int(os.getenv('ORACLE_REFINE', DEFAULT_REFINE))
    ORACLE_RTOL = float(os.getenv('ORACLE_RTOL', DEFAULT_RTOL))
    BR_TOL = float(os.getenv('BR_TOL', DEFAULT_BR_TOL))
    BR_MAX_ITER = int(os.getenv('BR_MAX_ITER', DEFAULT_BR_MAX_ITER))

    # Rate limiting
    RATELIMIT_STORAGE_URI = os.getenv('RATELIMIT_STORAGE_URI', 'memory://')
    VERIFY_RATE_LIMIT = os.getenv('VERIFY_RATE_LIMIT', '30 per minute')

    @classmethod
    def init_app(cls, app):
        """Reject solver settings the solvers cannot run with."""
        positive = [
            'SPECTRUM_TIER_THREADS',
            'ORACLE_GRID_POINTS',
            'ORACLE_RTOL',
            'BR_TOL',
            'BR_MAX_ITER',
        ]
        for key in positive:
            if getattr(cls, key) <= 0:
                raise ValueError(f'Config {key} must be positive')
        if cls.ORACLE_REFINE < 2:
            raise ValueError('Config ORACLE_REFINE must be at least 2')
        if not 0 < cls.SPECTRUM_TIER_EPSILON < 1:
            raise ValueError('Config SPECTRUM_TIER_EPSILON must lie in (0, 1)')


class DevelopmentConfig(BaseConfig):
    """Development configuration."""
    DEBUG = True
    ENV = 'development'


class ProductionConfig(BaseConfig):
    """Production configuration."""
    DEBUG = False
    ENV = 'production'

    @classmethod
    def init_app(cls, app):
        """Validate production config."""
        super().init_app(app)
        if cls.SECRET_KEY == 'dev-secret-key-change-in-production':
            raise ValueError('Production config missing: SECRET_KEY')


class TestingConfig(BaseConfig):
    """Testing configuration."""
    TESTING = True
    ENV = 'testing'
    SECRET_KEY = 'test-secret'
    SPECTRUM_TIER_THREADS = 2
    ORACLE_GRID_POINTS = 96
    RATELIMIT_ENABLED = False

"""
Error types and formatting helpers.
"""
from .errors import (
    DomainError,
    InfeasibleTariff,
    InvalidParam,
    NoConvergence,
    NoRoot,
    SpectrumTierError,
)

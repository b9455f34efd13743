"""
Domain types of the spectrum market.
"""
from app.models.market import (
    ChannelModel,
    MarketParams,
    Method,
    PricingScheme,
    Scenario,
    SnrRegime,
)
from app.models.solution import (
    DeviationReport,
    EquilibriumSolution,
    OwnerDecision,
    PowerProfile,
    ProviderDecision,
    RatioEntry,
    RatioReport,
)
from app.models.grid import GridSpec, SweepSpec

__all__ = [
    'ChannelModel',
    'MarketParams',
    'Method',
    'PricingScheme',
    'Scenario',
    'SnrRegime',
    'DeviationReport',
    'EquilibriumSolution',
    'OwnerDecision',
    'PowerProfile',
    'ProviderDecision',
    'RatioEntry',
    'RatioReport',
    'GridSpec',
    'SweepSpec',
]

"""
Market parameters and scenario selectors.
"""
from dataclasses import asdict, dataclass, replace
from enum import Enum
from itertools import product

DEFAULT_EPSILON = 1e-3
DEFAULT_W_BAR = 10.0


class PricingScheme(str, Enum):
    """How the service provider charges end users."""
    FLAT_RATE = 'flat'
    POWER_BASED = 'power'


class ChannelModel(str, Enum):
    """Whether users share the leased band (interference) or split it."""
    INTERFERENCE_FREE = 'free'
    INTERFERENCE = 'interference'


class SnrRegime(str, Enum):
    """General rate ln(1+γ) or its high-SNR approximation ln(γ)."""
    GENERAL = 'general'
    HIGH_SNR = 'high-snr'


class Method(str, Enum):
    """Which solver produced an equilibrium."""
    CLOSED_FORM = 'closed'
    NUMERICAL = 'numerical'
    ORACLE = 'oracle'


@dataclass(frozen=True)
class MarketParams:
    """
    Exogenous market constants.

    Attributes:
        n: Number of end users
        L: Crosstalk coefficient multiplying a user's own signal
        h: Channel fading gain
        t_bar: Maximal per-user transmit power
        sigma2: Noise power
        w_bar: Bandwidth cap (power-based high-SNR only)
        epsilon: Owner's undercut below the provider's exit tariff (power-based high-SNR only)
    """
    n: int
    L: float
    h: float
    t_bar: float
    sigma2: float
    w_bar: float = DEFAULT_W_BAR
    epsilon: float = DEFAULT_EPSILON

    @property
    def scale(self):
        """Profit and bandwidth scale nLhT̄/σ²."""
        return self.n * self.L * self.h * self.t_bar / self.sigma2

    @property
    def user_scale(self):
        """Per-user scale LhT̄/σ² (flat-rate tariff unit)."""
        return self.L * self.h * self.t_bar / self.sigma2

    @property
    def tariff_scale(self):
        """Power-tariff unit Lh/σ² (a user stops transmitting at this price)."""
        return self.L * self.h / self.sigma2

    def with_value(self, variable, value):
        """Copy with one sweepable field replaced."""
        field = SWEEP_FIELDS[variable]
        if field == 'n':
            value = int(round(value))
        return replace(self, **{field: value})

    def to_dict(self):
        return asdict(self)


# Sweep variable name -> MarketParams field
SWEEP_FIELDS = {
    'n': 'n',
    'tbar': 't_bar',
    'L': 'L',
    'h': 'h',
    'sigma2': 'sigma2',
}


@dataclass(frozen=True)
class Scenario:
    """One (pricing scheme, channel model, SNR regime) combination."""
    scheme: PricingScheme
    model: ChannelModel
    regime: SnrRegime

    @property
    def flat_rate(self):
        return self.scheme is PricingScheme.FLAT_RATE

    @property
    def interference(self):
        return self.model is ChannelModel.INTERFERENCE

    @property
    def high_snr(self):
        return self.regime is SnrRegime.HIGH_SNR

    @property
    def label(self):
        """Short tag like FR-IF-G."""
        scheme = 'FR' if self.flat_rate else 'PB'
        model = 'INT' if self.interference else 'IF'
        regime = 'H' if self.high_snr else 'G'
        return f'{scheme}-{model}-{regime}'

    @classmethod
    def of(cls, scheme, model, regime):
        """Build from enum values or their string forms."""
        return cls(PricingScheme(scheme), ChannelModel(model), SnrRegime(regime))

    @classmethod
    def all(cls):
        """All eight scenarios, general regime first."""
        return [
            cls(scheme, model, regime)
            for regime, model, scheme in product(SnrRegime, ChannelModel, PricingScheme)
        ]

    def to_dict(self):
        return {
            'scheme': self.scheme.value,
            'model': self.model.value,
            'regime': self.regime.value,
        }

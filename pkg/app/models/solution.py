"""
Solver outputs: equilibria, layer decisions and verification reports.
"""
from dataclasses import dataclass, field
from typing import Tuple

from app.models.market import Method

# Components compared between solvers, in table order
COMPONENTS = ('c_w', 'w', 'c_p', 't', 'v_p', 'v_a')


def relative_difference(a, b, floor=1e-12):
    """|a - b| relative to the larger magnitude."""
    return abs(a - b) / max(abs(a), abs(b), floor)


@dataclass(frozen=True)
class PowerProfile:
    """Symmetric per-user transmit power."""
    t: float


@dataclass(frozen=True)
class ProviderDecision:
    """Provider's lease and tariff with the users' equilibrium power."""
    w: float
    c_p: float
    v_p: float
    t: float

    def to_dict(self):
        return {'w': self.w, 'c_p': self.c_p, 'v_p': self.v_p, 't': self.t}


@dataclass(frozen=True)
class OwnerDecision:
    """Owner's tariff, profit and the lease it induces."""
    c_w: float
    v_a: float
    w: float

    def to_dict(self):
        return {'c_w': self.c_w, 'v_a': self.v_a, 'w': self.w}


@dataclass(frozen=True)
class EquilibriumSolution:
    """
    Full three-level equilibrium.

    Attributes:
        c_w: Owner tariff per unit bandwidth
        w: Leased bandwidth
        c_p: Provider tariff (per service for flat rate, per unit power otherwise)
        t: Symmetric per-user transmit power
        v_p: Provider profit
        v_a: Owner profit
        u_user: Per-user net utility
        throughput: Per-user rate
        snr: Implied per-user SNR (SINR under interference)
        method: Solver that produced the tuple
    """
    c_w: float
    w: float
    c_p: float
    t: float
    v_p: float
    v_a: float
    u_user: float
    throughput: float
    snr: float
    method: Method = Method.CLOSED_FORM

    def components(self):
        return {name: getattr(self, name) for name in COMPONENTS}

    def max_discrepancy(self, other):
        """Largest relative difference over the six equilibrium components."""
        return max(relative_difference(getattr(self, name), getattr(other, name))
                   for name in COMPONENTS)

    def to_dict(self):
        return {
            'c_w': self.c_w,
            'w': self.w,
            'c_p': self.c_p,
            't': self.t,
            'v_p': self.v_p,
            'v_a': self.v_a,
            'u_user': self.u_user,
            'throughput': self.throughput,
            'snr': self.snr,
            'method': self.method.value,
        }


@dataclass(frozen=True)
class RatioEntry:
    """A computed ratio next to the value quoted for comparison."""
    name: str
    computed: float
    quoted: float

    @property
    def relative_error(self):
        return relative_difference(self.computed, self.quoted)

    def to_dict(self):
        return {
            'name': self.name,
            'computed': self.computed,
            'quoted': self.quoted,
            'relative_error': self.relative_error,
        }


@dataclass(frozen=True)
class RatioReport:
    entries: Tuple[RatioEntry, ...] = field(default_factory=tuple)

    def __getitem__(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def within(self, tolerance):
        return all(entry.relative_error <= tolerance for entry in self.entries)

    def to_dict(self):
        return {'ratios': [entry.to_dict() for entry in self.entries]}


@dataclass(frozen=True)
class DeviationReport:
    """
    Largest profitable unilateral deviations found around a candidate.

    Gains are absolute payoff improvements; the relative forms divide the
    user gain by (1 + |u|) and the provider gain by max(|v_p|, tiny).
    """
    user_gain: float
    provider_gain: float
    user_gain_relative: float
    provider_gain_relative: float
    best_user_power: float
    best_provider: ProviderDecision

    def profitable(self, user_tol=1e-6, provider_tol=0.02):
        """True when some deviation beats the candidate by more than grid noise."""
        return self.user_gain_relative > user_tol or self.provider_gain_relative > provider_tol

    def to_dict(self):
        return {
            'user_gain': self.user_gain,
            'provider_gain': self.provider_gain,
            'user_gain_relative': self.user_gain_relative,
            'provider_gain_relative': self.provider_gain_relative,
            'best_user_power': self.best_user_power,
            'best_provider': self.best_provider.to_dict(),
        }

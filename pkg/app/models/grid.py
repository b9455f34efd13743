"""
Search grids for the oracle and parameter sweeps.
"""
import re
from dataclasses import asdict, dataclass, replace

import numpy as np

from app.models.market import SWEEP_FIELDS
from app.utils.errors import InvalidParam

DEFAULT_GRID_POINTS = 256
DEFAULT_REFINE = 16
DEFAULT_RTOL = 1e-10
DEFAULT_BR_TOL = 1e-10
DEFAULT_BR_MAX_ITER = 500
NUMERIC_TOLERANCE = 1e-6

SWEEP_PATTERN = re.compile(r'^\s*(\w+)\s*=\s*([^:]+):([^:]+):([^:]+)\s*$')


@dataclass(frozen=True)
class GridSpec:
    """
    Resolution and bounds of the brute-force search.

    Attributes:
        cw_points, w_points, cp_points: Coarse points per axis
        cw_max, w_max, cp_max: Axis upper bounds
        br_tol: Best-response fixed-point tolerance on t
        br_max_iter: Best-response iteration cap
        refine: Subdivisions of the winning bracket per refinement pass
        rtol: Relative bracket width the innermost (tariff) search refines to
    """
    cw_points: int
    w_points: int
    cp_points: int
    cw_max: float
    w_max: float
    cp_max: float
    br_tol: float = DEFAULT_BR_TOL
    br_max_iter: int = DEFAULT_BR_MAX_ITER
    refine: int = DEFAULT_REFINE
    rtol: float = DEFAULT_RTOL

    def doubled(self):
        """Same bounds with every coarse resolution doubled."""
        return replace(
            self,
            cw_points=2 * self.cw_points,
            w_points=2 * self.w_points,
            cp_points=2 * self.cp_points,
        )

    def with_overrides(self, overrides):
        """Copy with fields replaced from a {name: value} mapping."""
        return replace(self, **overrides)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepSpec:
    """One market parameter varied over an evenly spaced range."""
    variable: str
    start: float
    stop: float
    steps: int

    @classmethod
    def parse(cls, text):
        """
        Parse `var=start:stop:steps`.

        Raises:
            InvalidParam: malformed text, unknown variable or bad range
        """
        match = SWEEP_PATTERN.match(text or '')
        if not match:
            raise InvalidParam('sweep', f"expected var=start:stop:steps, got '{text}'")
        variable, start, stop, steps = match.groups()
        try:
            spec = cls(variable, float(start), float(stop), int(steps))
        except ValueError:
            raise InvalidParam('sweep', f"non-numeric range in '{text}'")
        spec.check()
        return spec

    def check(self):
        if self.variable not in SWEEP_FIELDS:
            known = ', '.join(SWEEP_FIELDS)
            raise InvalidParam('sweep', f"unknown variable '{self.variable}' (one of {known})")
        if not np.isfinite(self.start) or not np.isfinite(self.stop):
            raise InvalidParam('sweep', 'range endpoints must be finite')
        if self.start > self.stop:
            raise InvalidParam('sweep', 'start must not exceed stop')
        if self.steps < 1:
            raise InvalidParam('sweep', 'steps must be at least 1')
        return self

    def points(self):
        """Sweep values in increasing order; n sweeps are rounded and deduplicated."""
        if self.steps == 1:
            values = [self.start]
        else:
            values = np.linspace(self.start, self.stop, self.steps).tolist()
        if self.variable != 'n':
            return values
        seen = []
        for value in values:
            count = int(round(value))
            if count not in seen:
                seen.append(count)
        return seen

    def to_dict(self):
        return asdict(self)

"""
Solver error hierarchy.

Every error carries a machine-readable code, the CLI exit code and the HTTP
status used by the API error handlers.
"""


class SpectrumTierError(Exception):
    """Base class for all solver failures."""

    code = 'solver_error'
    exit_code = 3
    http_status = 422

    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def to_dict(self):
        """Structured payload for JSON error bodies and stderr reports."""
        return {'error': self.message, 'code': self.code}


class InvalidParam(SpectrumTierError):
    """A market parameter, grid or sweep field failed validation."""

    code = 'invalid_param'
    exit_code = 2
    http_status = 400

    def __init__(self, field, reason):
        super().__init__(f'{field}: {reason}')
        self.field = field
        self.reason = reason

    def to_dict(self):
        payload = super().to_dict()
        payload.update({'field': self.field, 'reason': self.reason})
        return payload


class DomainError(SpectrumTierError, ValueError):
    """Argument outside the mathematical domain of a function."""

    code = 'domain_error'


class NoConvergence(SpectrumTierError):
    """Best-response iteration hit its iteration cap."""

    code = 'no_convergence'

    def __init__(self, max_iter, cell=None):
        where = f' at {cell}' if cell is not None else ''
        super().__init__(f'best-response iteration did not converge in {max_iter} steps{where}')
        self.max_iter = max_iter
        self.cell = cell

    def to_dict(self):
        payload = super().to_dict()
        payload['max_iter'] = self.max_iter
        if self.cell is not None:
            payload['cell'] = self.cell
        return payload


class InfeasibleTariff(SpectrumTierError):
    """The provider leases no bandwidth at this owner tariff."""

    code = 'infeasible_tariff'

    def __init__(self, c_w):
        super().__init__(f'provider exits at bandwidth tariff c_w={c_w:.6g}')
        self.c_w = c_w

    def to_dict(self):
        payload = super().to_dict()
        payload['c_w'] = self.c_w
        return payload


class NoRoot(SpectrumTierError):
    """A root bracket never changed sign."""

    code = 'no_root'

    def __init__(self, lo, hi):
        super().__init__(f'no sign change on [{lo:.6g}, {hi:.6g}]')
        self.lo = lo
        self.hi = hi

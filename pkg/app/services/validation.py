"""
Parameter validation.

Turns raw MarketParams/Scenario pairs (and grid or JSON inputs) into
validated instances, rejecting anything the solvers cannot evaluate with a
named InvalidParam.
"""
import logging
import math
import numbers
from dataclasses import dataclass

from marshmallow import ValidationError

from app.models.grid import GridSpec
from app.models.market import (
    ChannelModel,
    MarketParams,
    PricingScheme,
    Scenario,
    SnrRegime,
)
from app.utils.errors import InvalidParam

logger = logging.getLogger(__name__)

POSITIVE_FIELDS = ('L', 'h', 't_bar', 'sigma2', 'w_bar', 'epsilon')


@dataclass(frozen=True)
class ValidatedInstance:
    params: MarketParams
    scenario: Scenario


def _real(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidParam(name, 'must be a number')
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParam(name, 'must be finite')
    return value


def _count(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParam(name, 'must be an integer')
    if value < minimum:
        raise InvalidParam(name, f'must be at least {minimum}')
    return int(value)


def validate_params(params):
    """
    Check market parameters independently of any scenario.

    Raises:
        InvalidParam: first offending field with the reason
    """
    if not isinstance(params, MarketParams):
        raise InvalidParam('params', 'expected MarketParams')
    _count('n', params.n, 1)
    for name in POSITIVE_FIELDS:
        if _real(name, getattr(params, name)) <= 0:
            raise InvalidParam(name, 'must be strictly positive')
    if params.epsilon >= 1:
        raise InvalidParam('epsilon', 'must be below 1')
    return params


def validate(params, scenario):
    """
    Check a market instance.

    Args:
        params: MarketParams to check
        scenario: Scenario the parameters will be solved under

    Returns:
        ValidatedInstance wrapping the unchanged inputs

    Raises:
        InvalidParam: first offending field with the reason
    """
    if not isinstance(params, MarketParams):
        raise InvalidParam('params', 'expected MarketParams')
    if not isinstance(scenario, Scenario):
        raise InvalidParam('scenario', 'expected Scenario')
    for axis, enum_cls in (('scheme', PricingScheme), ('model', ChannelModel), ('regime', SnrRegime)):
        if not isinstance(getattr(scenario, axis), enum_cls):
            raise InvalidParam(axis, f'must be one of {[m.value for m in enum_cls]}')

    validate_params(params)

    if (params.n == 1 and scenario.flat_rate and scenario.interference
            and not scenario.high_snr):
        raise InvalidParam('n', 'interference formulas need n≥2')

    return ValidatedInstance(params, scenario)


def validate_grid(grid):
    """
    Check an oracle grid.

    Raises:
        InvalidParam: non-positive bounds or tolerances, empty axes
    """
    if not isinstance(grid, GridSpec):
        raise InvalidParam('grid', 'expected GridSpec')
    for name in ('cw_points', 'w_points', 'cp_points'):
        _count(name, getattr(grid, name), 1)
    _count('refine', grid.refine, 2)
    _count('br_max_iter', grid.br_max_iter, 1)
    for name in ('cw_max', 'w_max', 'cp_max', 'br_tol', 'rtol'):
        if _real(name, getattr(grid, name)) <= 0:
            raise InvalidParam(name, 'must be strictly positive')
    return grid


def load_with(schema, payload):
    """
    Load a JSON-ready mapping with a marshmallow schema.

    Raises:
        InvalidParam: the first field marshmallow rejected
    """
    try:
        return schema.load(payload)
    except ValidationError as error:
        messages = error.messages if isinstance(error.messages, dict) else {'_schema': error.messages}
        field, reasons = next(iter(sorted(messages.items())))
        reason = '; '.join(str(item) for item in reasons) if isinstance(reasons, list) else str(reasons)
        logger.debug(f'Schema rejected {field}: {reason}')
        raise InvalidParam(field, reason)

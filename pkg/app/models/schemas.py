"""
marshmallow schemas for the JSON forms of the domain types.

Field names are the lower_snake_case attribute names of the dataclasses,
shared by the CLI `--config` loader, the HTTP API and the JSON output.
"""
from marshmallow import EXCLUDE, Schema, fields, post_load, validate

from app.models.grid import NUMERIC_TOLERANCE, GridSpec
from app.models.market import (
    DEFAULT_EPSILON,
    DEFAULT_W_BAR,
    ChannelModel,
    MarketParams,
    Method,
    PricingScheme,
    Scenario,
    SnrRegime,
)
from app.models.solution import EquilibriumSolution


def _choices(enum_cls):
    return validate.OneOf([member.value for member in enum_cls])


class MarketParamsSchema(Schema):
    n = fields.Integer(required=True, strict=True)
    L = fields.Float(required=True)
    h = fields.Float(required=True)
    t_bar = fields.Float(required=True)
    sigma2 = fields.Float(required=True)
    w_bar = fields.Float(load_default=DEFAULT_W_BAR)
    epsilon = fields.Float(load_default=DEFAULT_EPSILON)

    @post_load
    def make_params(self, data, **kwargs):
        return MarketParams(**data)


class ScenarioSchema(Schema):
    """The three scenario selectors; loads to a Scenario."""
    scheme = fields.String(required=True, validate=_choices(PricingScheme))
    model = fields.String(required=True, validate=_choices(ChannelModel))
    regime = fields.String(required=True, validate=_choices(SnrRegime))

    @post_load
    def make_scenario(self, data, **kwargs):
        return Scenario.of(data['scheme'], data['model'], data['regime'])


class InstanceSchema(Schema):
    """Flat object holding the market parameters and the scenario selectors."""
    n = fields.Integer(required=True, strict=True)
    L = fields.Float(required=True)
    h = fields.Float(required=True)
    t_bar = fields.Float(required=True)
    sigma2 = fields.Float(required=True)
    w_bar = fields.Float(load_default=DEFAULT_W_BAR)
    epsilon = fields.Float(load_default=DEFAULT_EPSILON)
    scheme = fields.String(required=True, validate=_choices(PricingScheme))
    model = fields.String(required=True, validate=_choices(ChannelModel))
    regime = fields.String(required=True, validate=_choices(SnrRegime))

    @post_load
    def make_instance(self, data, **kwargs):
        scenario = ScenarioSchema().load({key: data.pop(key) for key in ('scheme', 'model', 'regime')})
        return MarketParams(**data), scenario


class SolveRequestSchema(InstanceSchema):
    """HTTP body for a solve: an instance plus the solver method."""

    class Meta:
        unknown = EXCLUDE

    method = fields.String(load_default='closed', validate=validate.OneOf(['closed', 'numerical', 'both']))

    @post_load
    def make_instance(self, data, **kwargs):
        method = data.pop('method')
        params, scenario = super().make_instance(data, **kwargs)
        return params, scenario, method


class ParamsRequestSchema(MarketParamsSchema):
    """HTTP body carrying only market parameters."""

    class Meta:
        unknown = EXCLUDE


class EquilibriumSolutionSchema(Schema):
    c_w = fields.Float(required=True)
    w = fields.Float(required=True)
    c_p = fields.Float(required=True)
    t = fields.Float(required=True)
    v_p = fields.Float(required=True)
    v_a = fields.Float(required=True)
    u_user = fields.Float(required=True)
    throughput = fields.Float(required=True)
    snr = fields.Float(required=True)
    method = fields.String(required=True, validate=_choices(Method))

    @post_load
    def make_solution(self, data, **kwargs):
        data['method'] = Method(data['method'])
        return EquilibriumSolution(**data)


class GridOverridesSchema(Schema):
    """Partial GridSpec fields accepted by `verify --grid` and the verify endpoint."""
    cw_points = fields.Integer(strict=True)
    w_points = fields.Integer(strict=True)
    cp_points = fields.Integer(strict=True)
    cw_max = fields.Float()
    w_max = fields.Float()
    cp_max = fields.Float()
    br_tol = fields.Float()
    br_max_iter = fields.Integer(strict=True)
    refine = fields.Integer(strict=True)
    rtol = fields.Float()


class GridSpecSchema(GridOverridesSchema):
    cw_points = fields.Integer(required=True, strict=True)
    w_points = fields.Integer(required=True, strict=True)
    cp_points = fields.Integer(required=True, strict=True)
    cw_max = fields.Float(required=True)
    w_max = fields.Float(required=True)
    cp_max = fields.Float(required=True)

    @post_load
    def make_grid(self, data, **kwargs):
        return GridSpec(**data)


class VerifyOptionsSchema(Schema):
    """Comparison tolerances accepted by the verify endpoint."""
    oracle_tol = fields.Float(load_default=None, allow_none=True, validate=validate.Range(min=0))
    numeric_tol = fields.Float(load_default=NUMERIC_TOLERANCE, validate=validate.Range(min=0))

"""
Equilibrium API endpoints.
"""
import logging

from flask import Blueprint, current_app, jsonify, request

from app import limiter
from app.models.market import Method
from app.models.schemas import (
    GridOverridesSchema,
    ParamsRequestSchema,
    SolveRequestSchema,
    VerifyOptionsSchema,
)
from app.services.chain import RootVariant, ratio_report, solve_both, solve_equilibrium
from app.services.tables import coefficient_table
from app.services.oracle import grid_from_config
from app.services.validation import load_with, validate
from app.services.verification import verify_instance
from app.utils.errors import InvalidParam
from app.utils.formatting import round_payload

logger = logging.getLogger(__name__)

equilibrium_bp = Blueprint('equilibrium', __name__)


def _body():
    """JSON body with the configured epsilon filled in."""
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        raise InvalidParam('body', 'expected a JSON object')
    payload = dict(payload)
    payload.setdefault('epsilon', current_app.config['SPECTRUM_TIER_EPSILON'])
    return payload


@equilibrium_bp.route('/solve', methods=['POST'])
def solve():
    """
    Solve one instance.

    Request body:
        {"n": 10, "L": 2, "h": 1, "t_bar": 1, "sigma2": 1,
         "scheme": "power", "model": "free", "regime": "general",
         "method": "closed" | "numerical" | "both",
         "root_variant": "table" | "appendix"}

    Returns:
        Solution JSON, or {"closed", "numerical", "discrepancy"} for method=both
    """
    payload = _body()
    variant = payload.pop('root_variant', RootVariant.TABLE.value)
    try:
        root_variant = RootVariant(variant)
    except ValueError:
        raise InvalidParam('root_variant', 'must be "table" or "appendix"')
    params, scenario, method = load_with(SolveRequestSchema(), payload)
    validate(params, scenario)
    if method == 'both':
        result = solve_both(params, scenario, root_variant)
    else:
        result = solve_equilibrium(params, scenario, Method(method), root_variant).to_dict()
    return jsonify(round_payload(result)), 200


@equilibrium_bp.route('/verify', methods=['POST'])
@limiter.limit(lambda: current_app.config['VERIFY_RATE_LIMIT'])
def verify():
    """
    Compare closed form, numerical solve and brute-force oracle.

    Request body:
        Instance fields plus optional "grid" (GridSpec field overrides),
        "oracle_tol" and "numeric_tol"

    Returns:
        Verification report; "passed" is false when any check failed
    """
    payload = _body()
    overrides = load_with(GridOverridesSchema(), payload.pop('grid', None) or {})
    options = load_with(VerifyOptionsSchema(),
                        {key: payload.pop(key) for key in ('oracle_tol', 'numeric_tol') if key in payload})
    params, scenario, _ = load_with(SolveRequestSchema(), payload)
    validate(params, scenario)

    grid = grid_from_config(current_app.config, params, scenario, overrides)
    report = verify_instance(params, scenario, grid, oracle_tol=options['oracle_tol'],
                             numeric_tol=options['numeric_tol'])
    logger.info(f'Verify request for {scenario.label}: passed={report["passed"]}')
    return jsonify(round_payload(report)), 200


@equilibrium_bp.route('/table', methods=['POST'])
def table():
    """
    Closed-form equilibria of every applicable scenario with scaled coefficients.

    Request body:
        {"n": 10, "L": 2, "h": 1, "t_bar": 1, "sigma2": 1}
    """
    params = load_with(ParamsRequestSchema(), _body())
    columns = coefficient_table(params)
    return jsonify(round_payload({'columns': [column.to_dict() for column in columns]})), 200


@equilibrium_bp.route('/ratios', methods=['POST'])
def ratios():
    """Regime and pricing-scheme ratios next to their reference values."""
    params = load_with(ParamsRequestSchema(), _body())
    return jsonify(round_payload(ratio_report(params).to_dict())), 200

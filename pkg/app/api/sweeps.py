"""
Parameter sweep API endpoints.
"""
import logging

from flask import Blueprint, Response, current_app, request

from app.models.grid import SweepSpec
from app.models.market import SWEEP_FIELDS, ChannelModel, Method, PricingScheme, SnrRegime
from app.models.schemas import ParamsRequestSchema
from app.services.sweep import get_preset, run_preset, run_sweep, write_csv
from app.services.validation import load_with, validate_params
from app.utils.errors import InvalidParam

logger = logging.getLogger(__name__)

sweeps_bp = Blueprint('sweeps', __name__)

SWEEP_METHODS = (Method.CLOSED_FORM.value, Method.NUMERICAL.value)


@sweeps_bp.route('', methods=['POST'])
@sweeps_bp.route('/', methods=['POST'])
def create_sweep():
    """
    Run a sweep and return it as CSV.

    Request body (preset):
        {"preset": "fig1"}

    Request body (custom):
        {"sweep": "n=2:20:10", "L": 400, "h": 1, "t_bar": 0.5, "sigma2": 10,
         "schemes": ["flat", "power"], "model": "interference", "regime": "general"}

    Returns:
        text/csv with one row per (sweep point, scheme)
    """
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict):
        raise InvalidParam('body', 'expected a JSON object')
    payload = dict(payload)
    method = payload.pop('method', Method.CLOSED_FORM.value)
    if method not in SWEEP_METHODS:
        raise InvalidParam('method', f'must be one of {list(SWEEP_METHODS)}')
    threads = current_app.config['SPECTRUM_TIER_THREADS']

    if 'preset' in payload:
        name = payload['preset']
        get_preset(name)
        rows = run_preset(name, method=Method(method), threads=threads)
    else:
        spec = SweepSpec.parse(payload.pop('sweep', None))
        schemes = payload.pop('schemes', ['flat', 'power'])
        model = payload.pop('model', 'interference')
        regime = payload.pop('regime', 'general')
        payload.setdefault(SWEEP_FIELDS[spec.variable], spec.points()[0])
        payload.setdefault('epsilon', current_app.config['SPECTRUM_TIER_EPSILON'])
        base = validate_params(load_with(ParamsRequestSchema(), payload))
        try:
            schemes = [PricingScheme(scheme) for scheme in schemes]
            model, regime = ChannelModel(model), SnrRegime(regime)
        except ValueError as error:
            raise InvalidParam('scenario', str(error))
        rows = run_sweep(base, spec, schemes, model=model, regime=regime,
                         method=Method(method), threads=threads)

    logger.info(f'Sweep request returned {len(rows)} rows')
    return Response(write_csv(rows), mimetype='text/csv'), 200

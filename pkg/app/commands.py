"""
Flask CLI commands: solve, sweep, verify, table and ratios.

stdout carries only the JSON/CSV/table output; errors go to stderr as JSON
with the exit code of the error class (2 for invalid input, 3 for solver
failures, 1 for a failed verification).
"""
import functools
import json
import sys

import click
from flask import current_app
from marshmallow import fields

from app.models.grid import SweepSpec
from app.models.market import ChannelModel, Method, PricingScheme, SnrRegime
from app.models.schemas import GridOverridesSchema, InstanceSchema, ParamsRequestSchema
from app.services.chain import RootVariant, ratio_report, solve_both, solve_equilibrium
from app.services.oracle import grid_from_config
from app.services.sweep import PRESETS, run_preset, run_sweep, write_csv
from app.services.tables import coefficient_table, format_table
from app.services.validation import load_with, validate, validate_params
from app.services.verification import NUMERIC_TOLERANCE, format_report, verify_instance
from app.utils.errors import InvalidParam, SpectrumTierError
from app.utils.formatting import round_payload

VERIFY_FAILED = 1

# CLI flag -> schema field
FLAG_FIELDS = {
    'n': 'n',
    'L': 'L',
    'h': 'h',
    'tbar': 't_bar',
    'sigma2': 'sigma2',
    'wbar': 'w_bar',
    'epsilon': 'epsilon',
    'scheme': 'scheme',
    'model': 'model',
    'regime': 'regime',
}


def _choice(enum_cls):
    return click.Choice([member.value for member in enum_cls])


def params_options(func):
    """Market parameter flags shared by every command."""
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='JSON file with instance fields; flags override it'),
        click.option('--n', 'n', type=int, help='Number of end users'),
        click.option('--L', 'L', type=float, help='Crosstalk coefficient'),
        click.option('--h', 'h', type=float, help='Channel fading gain'),
        click.option('--tbar', 'tbar', type=float, help='Maximal transmit power'),
        click.option('--sigma2', 'sigma2', type=float, help='Noise power'),
        click.option('--wbar', 'wbar', type=float, help='Bandwidth cap (power-based high SNR)'),
        click.option('--epsilon', 'epsilon', type=float, help='Owner undercut (power-based high SNR)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def scenario_options(func):
    """Scenario selector flags."""
    options = [
        click.option('--scheme', type=_choice(PricingScheme), help='Pricing scheme'),
        click.option('--model', type=_choice(ChannelModel), help='Channel model'),
        click.option('--regime', type=_choice(SnrRegime), help='SNR regime'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def reports_errors(func):
    """Turn solver errors into a JSON line on stderr and the error's exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SpectrumTierError as error:
            current_app.logger.error(f'{func.__name__} failed: {error.message}')
            click.echo(json.dumps(error.to_dict()), err=True)
            sys.exit(error.exit_code)
    return wrapper


def _payload(config_path, flags):
    payload = {}
    if config_path:
        with open(config_path) as handle:
            try:
                payload = json.load(handle)
            except json.JSONDecodeError as error:
                raise InvalidParam('config', f'not valid JSON ({error.msg})')
        if not isinstance(payload, dict):
            raise InvalidParam('config', 'expected a JSON object')
    for flag, value in flags.items():
        if value is not None:
            payload[FLAG_FIELDS[flag]] = value
    payload.setdefault('epsilon', current_app.config['SPECTRUM_TIER_EPSILON'])
    return payload


def load_instance(config_path, **flags):
    """Build (params, scenario) from --config and flags, validated."""
    payload = _payload(config_path, flags)
    params, scenario = load_with(InstanceSchema(), payload)
    validate(params, scenario)
    return params, scenario


def load_params(config_path, **flags):
    """Build MarketParams from --config and flags, ignoring scenario fields."""
    payload = _payload(config_path, flags)
    return validate_params(load_with(ParamsRequestSchema(), payload))


def _echo_json(payload):
    click.echo(json.dumps(round_payload(payload), indent=2))


def _grid_overrides(text):
    """Parse `key=value,key=value` into GridSpec field overrides."""
    if not text:
        return {}
    raw = {}
    for item in text.split(','):
        key, sep, value = item.partition('=')
        if not sep:
            raise InvalidParam('grid', f"expected key=value, got '{item}'")
        key = key.strip()
        field = GridOverridesSchema().fields.get(key)
        if field is None:
            raise InvalidParam('grid', f"unknown grid field '{key}'")
        try:
            raw[key] = int(value) if isinstance(field, fields.Integer) else float(value)
        except ValueError:
            raise InvalidParam(key, f"not a number: '{value.strip()}'")
    return load_with(GridOverridesSchema(), raw)


def register_cli_commands(app):
    """Register Flask CLI commands."""

    @app.cli.command('solve')
    @params_options
    @scenario_options
    @click.option('--method', type=click.Choice(['closed', 'numerical', 'both']), default='closed',
                  show_default=True, help='Solver path')
    @click.option('--root-variant', type=_choice(RootVariant), default=RootVariant.TABLE.value,
                  show_default=True, help='Owner root for flat-rate high-SNR interference')
    @reports_errors
    def solve(config_path, method, root_variant, **flags):
        """Solve one instance and print the equilibrium as JSON."""
        params, scenario = load_instance(config_path, **flags)
        if method == 'both':
            _echo_json(solve_both(params, scenario, RootVariant(root_variant)))
        else:
            solution = solve_equilibrium(params, scenario, Method(method), RootVariant(root_variant))
            _echo_json(solution.to_dict())

    @app.cli.command('sweep')
    @params_options
    @click.option('--preset', type=click.Choice(sorted(PRESETS)), help='Built-in sweep')
    @click.option('--sweep', 'sweep_text', help='var=start:stop:steps')
    @click.option('--scheme', 'schemes', type=_choice(PricingScheme), multiple=True,
                  help='Pricing scheme (repeatable; default both)')
    @click.option('--model', type=_choice(ChannelModel), default=ChannelModel.INTERFERENCE.value,
                  show_default=True)
    @click.option('--regime', type=_choice(SnrRegime), default=SnrRegime.GENERAL.value,
                  show_default=True)
    @click.option('--method', type=click.Choice(['closed', 'numerical']), default='closed',
                  show_default=True)
    @click.option('--out', 'out_path', type=click.Path(dir_okay=False, writable=True),
                  help='CSV file (stdout when omitted)')
    @reports_errors
    def sweep(config_path, preset, sweep_text, schemes, model, regime, method, out_path, **flags):
        """Solve a parameter sweep and write it as CSV."""
        threads = current_app.config['SPECTRUM_TIER_THREADS']
        if preset and sweep_text:
            raise InvalidParam('sweep', 'use either --preset or --sweep')
        if preset:
            rows = run_preset(preset, method=Method(method), threads=threads)
        elif sweep_text:
            spec = SweepSpec.parse(sweep_text)
            if flags.get(spec.variable) is None:
                flags[spec.variable] = spec.points()[0]
            base = load_params(config_path, **flags)
            rows = run_sweep(
                base, spec, schemes or [PricingScheme.FLAT_RATE, PricingScheme.POWER_BASED],
                model=model, regime=regime, method=Method(method), threads=threads,
            )
        else:
            raise InvalidParam('sweep', 'one of --preset or --sweep is required')

        if out_path:
            write_csv(rows, out_path)
            current_app.logger.info(f'Wrote {len(rows)} rows to {out_path}')
        else:
            click.echo(write_csv(rows), nl=False)

    @app.cli.command('verify')
    @params_options
    @scenario_options
    @click.option('--grid', 'grid_text', help='GridSpec overrides, e.g. cw_points=64,rtol=1e-8')
    @click.option('--oracle-tol', type=float, help='Oracle agreement tolerance (default from the grid)')
    @click.option('--numeric-tol', type=float, default=NUMERIC_TOLERANCE, show_default=True,
                  help='Closed-form vs numerical tolerance')
    @click.option('--json', 'as_json', is_flag=True, help='Print the full report as JSON')
    @reports_errors
    def verify(config_path, grid_text, oracle_tol, numeric_tol, as_json, **flags):
        """Check closed form and numerical solve against the brute-force oracle."""
        params, scenario = load_instance(config_path, **flags)
        grid = grid_from_config(current_app.config, params, scenario, _grid_overrides(grid_text))
        report = verify_instance(params, scenario, grid, oracle_tol=oracle_tol, numeric_tol=numeric_tol)
        if as_json:
            _echo_json(report)
        else:
            click.echo(format_report(report))
        if not report['passed']:
            sys.exit(VERIFY_FAILED)

    @app.cli.command('table')
    @params_options
    @click.option('--json', 'as_json', is_flag=True, help='Print the table as JSON')
    @reports_errors
    def table(config_path, as_json, **flags):
        """Print every applicable scenario's equilibrium with scaled coefficients."""
        columns = coefficient_table(load_params(config_path, **flags))
        if as_json:
            _echo_json({'columns': [column.to_dict() for column in columns]})
        else:
            click.echo(format_table(columns))

    @app.cli.command('ratios')
    @params_options
    @reports_errors
    def ratios(config_path, **flags):
        """Print regime and pricing-scheme ratios next to their reference values."""
        _echo_json(ratio_report(load_params(config_path, **flags)).to_dict())

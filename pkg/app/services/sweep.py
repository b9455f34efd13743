"""
Parameter sweeps.

Solves one instance per (sweep point, pricing scheme) and collects the rows
in sweep order. Points are independent, so they are solved on a thread pool.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import pandas as pd

from app.models.grid import SweepSpec
from app.models.market import (
    ChannelModel,
    MarketParams,
    Method,
    PricingScheme,
    Scenario,
    SnrRegime,
)
from app.services.chain import solve_equilibrium
from app.utils.errors import InvalidParam
from app.utils.formatting import SIGNIFICANT_DIGITS

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    'var', 'value', 'scheme', 'model', 'regime',
    'c_w', 'w', 'c_p', 't', 'v_p', 'v_a', 'u_user', 'throughput',
]


@dataclass(frozen=True)
class SweepPreset:
    """A sweep with its base market and the scenarios it is run under."""
    name: str
    base: MarketParams
    spec: SweepSpec
    schemes: tuple = (PricingScheme.FLAT_RATE, PricingScheme.POWER_BASED)
    model: ChannelModel = ChannelModel.INTERFERENCE
    regime: SnrRegime = SnrRegime.GENERAL


# L=400, h=1, σ²=10 throughout; n varies with T̄=0.5, then T̄ varies with n=40
PRESETS = {
    'fig1': SweepPreset(
        name='fig1',
        base=MarketParams(n=40, L=400.0, h=1.0, t_bar=0.5, sigma2=10.0),
        spec=SweepSpec('n', 2, 100, 99),
    ),
    'fig2': SweepPreset(
        name='fig2',
        base=MarketParams(n=40, L=400.0, h=1.0, t_bar=0.5, sigma2=10.0),
        spec=SweepSpec('tbar', 0.05, 2.0, 40),
    ),
}


def get_preset(name):
    """Look up a built-in preset by name."""
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidParam('preset', f"unknown preset '{name}' (one of {', '.join(PRESETS)})")


def _row(spec, value, scenario, solution):
    row = {
        'var': spec.variable,
        'value': value,
        'scheme': scenario.scheme.value,
        'model': scenario.model.value,
        'regime': scenario.regime.value,
    }
    row.update({column: getattr(solution, column) for column in CSV_COLUMNS[5:]})
    return row


def run_sweep(base, spec, schemes, model=ChannelModel.INTERFERENCE, regime=SnrRegime.GENERAL,
              method=Method.CLOSED_FORM, threads=None):
    """
    Solve every (sweep point, scheme) pair.

    Args:
        base: MarketParams the sweep starts from
        spec: SweepSpec naming the varied parameter
        schemes: PricingSchemes, one row each per point in this order
        model: ChannelModel for every row
        regime: SnrRegime for every row
        method: CLOSED_FORM or NUMERICAL
        threads: Worker cap (defaults to the CPU count)

    Returns:
        List of row dicts keyed by CSV_COLUMNS, in sweep order
    """
    spec.check()
    schemes = [PricingScheme(scheme) for scheme in schemes]
    if not schemes:
        raise InvalidParam('scheme', 'at least one pricing scheme is required')

    jobs = [
        (value, Scenario(scheme, ChannelModel(model), SnrRegime(regime)))
        for value in spec.points()
        for scheme in schemes
    ]

    def solve(job):
        value, scenario = job
        params = base.with_value(spec.variable, value)
        return _row(spec, value, scenario, solve_equilibrium(params, scenario, method))

    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as executor:
        rows = list(executor.map(solve, jobs))

    logger.info(f'Sweep over {spec.variable} produced {len(rows)} rows with {workers} workers')
    return rows


def run_preset(name, method=Method.CLOSED_FORM, threads=None):
    """Run a built-in preset."""
    preset = get_preset(name)
    return run_sweep(
        preset.base, preset.spec, preset.schemes,
        model=preset.model, regime=preset.regime, method=method, threads=threads,
    )


def to_frame(rows):
    """Rows as a DataFrame with the CSV column order."""
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_csv(rows, target=None):
    """
    Write rows as CSV with 12 significant digits.

    Args:
        rows: Output of run_sweep
        target: Path or text stream; None returns the CSV as a string

    Returns:
        The CSV text when target is None
    """
    return to_frame(rows).to_csv(
        target, index=False, float_format=f'%.{SIGNIFICANT_DIGITS}g', lineterminator='\n',
    )

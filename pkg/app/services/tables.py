"""
Side-by-side equilibrium tables with dimensionless coefficients.
"""
import logging
from dataclasses import dataclass

from app.models.market import Method, Scenario
from app.models.solution import COMPONENTS
from app.services.chain import scaled_coefficients, solve_equilibrium
from app.services.validation import validate_params
from app.utils.errors import InfeasibleTariff, InvalidParam
from app.utils.formatting import format_number

logger = logging.getLogger(__name__)

TABLE_DIGITS = 6


@dataclass(frozen=True)
class TableColumn:
    """One scenario's equilibrium and its scaled coefficients."""
    scenario: Scenario
    values: dict
    coefficients: dict

    def to_dict(self):
        return {
            'scenario': self.scenario.label,
            **self.scenario.to_dict(),
            'values': self.values,
            'coefficients': self.coefficients,
        }


def coefficient_table(params, method=Method.CLOSED_FORM, scenarios=None):
    """
    Solve every applicable scenario for one market.

    Scenarios whose formulas do not apply to the parameters (flat-rate
    interference with a single user) or where no tariff earns the owner
    revenue are skipped.

    Returns:
        List of TableColumn
    """
    validate_params(params)
    columns = []
    for scenario in scenarios or Scenario.all():
        try:
            solution = solve_equilibrium(params, scenario, method)
        except (InvalidParam, InfeasibleTariff) as error:
            logger.info(f'Skipping {scenario.label}: {error.message}')
            continue
        columns.append(TableColumn(
            scenario=scenario,
            values=solution.components(),
            coefficients=scaled_coefficients(solution, params, scenario),
        ))
    return columns


def format_table(columns, digits=TABLE_DIGITS):
    """
    Render columns as fixed-width text: one row per component, raw value and coefficient.
    """
    width = max([12] + [len(column.scenario.label) + 2 for column in columns])
    header = 'component'.ljust(12) + ''.join(column.scenario.label.rjust(width) for column in columns)
    lines = [header, '-' * len(header)]
    for name in COMPONENTS:
        raw = ''.join(format_number(column.values[name], digits).rjust(width) for column in columns)
        scaled = ''.join(format_number(column.coefficients[name], digits).rjust(width) for column in columns)
        lines.append(name.ljust(12) + raw)
        lines.append(f'  {name}*'.ljust(12) + scaled)
    return '\n'.join(lines)

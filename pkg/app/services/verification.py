"""
Cross-checks the analytic solvers against the brute-force oracle.
"""
import logging

from app.models.grid import NUMERIC_TOLERANCE
from app.models.market import Method
from app.services.chain import solve_equilibrium
from app.services.oracle import (
    agreement_tolerance,
    compare_solutions,
    default_grid,
    deviation_check,
    grid_solve,
)
from app.services.validation import validate, validate_grid

logger = logging.getLogger(__name__)


def verify_instance(params, scenario, grid=None, oracle_tol=None, numeric_tol=NUMERIC_TOLERANCE):
    """
    Compare closed form, numerical solve and oracle for one instance.

    Args:
        params: MarketParams
        scenario: Scenario
        grid: GridSpec; default_grid(params, scenario) when omitted
        oracle_tol: Oracle agreement tolerance; agreement_tolerance(grid) when omitted
        numeric_tol: Closed-form vs numerical tolerance

    Returns:
        Dict with the three solutions, comparison rows, the deviation report
        and an overall `passed` flag
    """
    validate(params, scenario)
    grid = validate_grid(grid or default_grid(params, scenario))
    oracle_tol = agreement_tolerance(grid) if oracle_tol is None else oracle_tol

    closed = solve_equilibrium(params, scenario, Method.CLOSED_FORM)
    numerical = solve_equilibrium(params, scenario, Method.NUMERICAL)
    oracle = grid_solve(params, scenario, grid)
    deviations = deviation_check(closed, params, scenario, grid)

    numerical_rows = compare_solutions(closed, numerical, numeric_tol)
    oracle_rows = compare_solutions(closed, oracle, oracle_tol)
    stable = not deviations.profitable(provider_tol=oracle_tol)
    passed = all(row['passed'] for row in numerical_rows + oracle_rows) and stable

    log = logger.info if passed else logger.warning
    log(f'Verification of {scenario.label}: {"PASS" if passed else "FAIL"}')
    return {
        'scenario': scenario.to_dict(),
        'params': params.to_dict(),
        'grid': grid.to_dict(),
        'solutions': {
            'closed': closed.to_dict(),
            'numerical': numerical.to_dict(),
            'oracle': oracle.to_dict(),
        },
        'numerical': numerical_rows,
        'oracle': oracle_rows,
        'deviation': {**deviations.to_dict(), 'stable': stable},
        'passed': passed,
    }


def format_report(report):
    """Plain-text PASS/FAIL table for the CLI."""
    lines = [f"{'check':<22}{'component':<10}{'reference':>18}{'candidate':>18}{'error':>12}{'tol':>10}  result"]
    for label, key in (('numerical vs closed', 'numerical'), ('oracle vs closed', 'oracle')):
        for row in report[key]:
            lines.append(
                f"{label:<22}{row['component']:<10}{row['reference']:>18.10g}{row['candidate']:>18.10g}"
                f"{row['error']:>12.3g}{row['tolerance']:>10.3g}  {'PASS' if row['passed'] else 'FAIL'}"
            )
    deviation = report['deviation']
    lines.append(
        f"{'deviation':<22}{'user':<10}{deviation['user_gain_relative']:>48.3g}"
        f"  {'PASS' if deviation['stable'] else 'FAIL'}"
    )
    lines.append(f"{'deviation':<22}{'provider':<10}{deviation['provider_gain_relative']:>48.3g}")
    lines.append(f"overall: {'PASS' if report['passed'] else 'FAIL'}")
    return '\n'.join(lines)

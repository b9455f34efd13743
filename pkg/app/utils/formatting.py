"""
Number formatting shared by the CLI, the CSV writer and the API.
"""
import math

SIGNIFICANT_DIGITS = 12


def format_number(value, digits=SIGNIFICANT_DIGITS):
    """Render a number as decimal text with a fixed count of significant digits."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return f'{value:.{digits}g}'


def round_significant(value, digits=SIGNIFICANT_DIGITS):
    """Round a float to `digits` significant digits, leaving ints and non-finite values alone."""
    if isinstance(value, bool) or not isinstance(value, float) or not math.isfinite(value):
        return value
    return float(f'{value:.{digits}g}')


def round_payload(payload, digits=SIGNIFICANT_DIGITS):
    """Recursively round every float inside a JSON-ready structure."""
    if isinstance(payload, dict):
        return {key: round_payload(item, digits) for key, item in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [round_payload(item, digits) for item in payload]
    return round_significant(payload, digits)

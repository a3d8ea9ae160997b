"""
Formatting helpers for numeric output.

This module renders floats the way result files store them and builds the
labels used for evaluation abscissae in logs and summaries.
"""

import math

from src.config.config import FLOAT_FORMAT


def format_float(value: float, float_format: str = FLOAT_FORMAT) -> str:
    """
    Renders a float with enough digits to round-trip.

    Args:
        value (float): The value to format.
        float_format (str): printf-style format. Defaults to "%.17g".

    Returns:
        str: The rendered value; "nan", "inf" or "-inf" for non-finite input.
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float_format % value


def abscissa_label(fraction: float) -> str:
    """
    Label for the evaluation point x = fraction * a.

    Args:
        fraction (float): Position as a fraction of a, in [0, 1].

    Returns:
        str: For example "a" for 1.0 and "0.25a" for 0.25.
        Example: 0.5 becomes "0.5a".
    """
    if not 0 <= fraction <= 1:
        raise ValueError(f"Invalid abscissa fraction: {fraction}. Expected [0, 1]")
    if fraction == 1:
        return "a"
    return f"{fraction:g}a"

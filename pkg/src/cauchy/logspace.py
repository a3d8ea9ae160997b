"""
Exponent bookkeeping for growth factors that overflow double precision.

Values are carried as (sign, log-magnitude) pairs so that factors such as
e^{2 sqrt(lambda_p) a} never have to be formed explicitly. Reductions use a
fixed axis order so results are reproducible.
"""

from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from src.config.config import LOG_SPACE_THRESHOLD


def log_abs(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Splits values into sign and log-magnitude.

    Args:
        values (np.ndarray): Any real array.

    Returns:
        Tuple[np.ndarray, np.ndarray]: The sign (-1, 0 or 1) and log|values|,
            with log 0 = -inf.
    """
    values = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(values), np.log(np.abs(values))


def log_sum(log_terms: np.ndarray, axis=None) -> np.ndarray:
    """
    Log of the sum of exp(log_terms), -inf when every term is -inf.

    Args:
        log_terms (np.ndarray): Log-magnitudes of nonnegative summands.
        axis: Axis to reduce; None reduces everything.

    Returns:
        np.ndarray: log(sum(exp(log_terms))) along the axis.
    """
    log_terms = np.asarray(log_terms, dtype=float)
    if log_terms.size == 0:
        return np.float64(-np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        return logsumexp(log_terms, axis=axis)


def log_expm1(z: np.ndarray) -> np.ndarray:
    """
    Computes log(e^z - 1) for z >= 0 without forming e^z.

    Args:
        z (np.ndarray): Nonnegative exponents.

    Returns:
        np.ndarray: log(e^z - 1); -inf at z = 0.
    """
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return z + np.log(-np.expm1(-z))


def to_linear(log_values: np.ndarray, sign: np.ndarray = None) -> np.ndarray:
    """
    Converts log-magnitudes back to plain floats; overflow yields inf.

    Args:
        log_values (np.ndarray): Log-magnitudes.
        sign (np.ndarray, optional): Signs to reapply. Defaults to +1.

    Returns:
        np.ndarray: sign * exp(log_values).
    """
    with np.errstate(over="ignore"):
        linear = np.exp(np.asarray(log_values, dtype=float))
    if sign is None:
        return linear
    return np.asarray(sign, dtype=float) * linear


def needs_log_space(
    exponents: np.ndarray, threshold: float = LOG_SPACE_THRESHOLD
) -> bool:
    """Whether any exponent is past the plain-evaluation threshold."""
    exponents = np.asarray(exponents, dtype=float)
    return bool(exponents.size and np.max(exponents) > threshold)

"""Input validation helpers shared by the public API."""

import numbers

import numpy as np

# Relative tolerance used when deciding whether a time is a multiple of the grid step.
GRID_RTOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a structural requirement."""


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_open_unit(value, name):
    if not isinstance(value, numbers.Real) or not 0 < value < 1:
        raise ValidationError(f"{name} must lie in the open interval (0, 1), got {value!r}")
    return float(value)


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def grid_index(x, step, name="value"):
    """Return ``x / step`` as an int, raising if ``x`` is not on the grid."""
    ratio = x / step
    k = int(round(ratio))
    if abs(ratio - k) > GRID_RTOL * max(1.0, abs(ratio)):
        raise ValidationError(f"{name}={float(x)!r} is not an integer multiple of grid_step={float(step)!r}")
    return k


def check_sorted_strict(times, name="times"):
    times = np.array(times, dtype=float)
    if times.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(times)):
        raise ValidationError(f"{name} contains non-finite values")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return times


def check_spd(matrix, name="matrix"):
    """Return the Cholesky factor of ``matrix`` or raise if it is not SPD."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=1e-10, atol=1e-12):
        raise ValidationError(f"{name} is not symmetric")
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise ValidationError(f"{name} is not positive definite") from None

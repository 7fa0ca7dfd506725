"""Small input-validation helpers used across the package."""

import math

import numpy as np

from .errors import ConfigError, ShapeError


def check_positive(name, value, allow_zero=False, exc=ConfigError):
    value = float(value)
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise exc(f"{name} must be finite and {bound}, got {value!r}")
    return value


def check_range(name, bounds):
    """Validate a ``(min, max)`` pair and return it as floats."""
    try:
        lo, hi = (float(b) for b in bounds)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a (min, max) pair, got {bounds!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError(f"{name} bounds must be finite, got {bounds!r}")
    if lo > hi:
        raise ConfigError(f"{name} is empty: min {lo} > max {hi}")
    return lo, hi


def as_vector(x, name="x", dtype=float):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def check_same_length(**arrays):
    lengths = {k: len(v) for k, v in arrays.items()}
    if len(set(lengths.values())) > 1:
        detail = ", ".join(f"{k}={n}" for k, n in lengths.items())
        raise ShapeError(f"length mismatch: {detail}")
    return next(iter(lengths.values()))

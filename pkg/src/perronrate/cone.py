"""Order comparisons and the Thompson / Hilbert metrics on the open orthant.

Vectors are plain numpy arrays. :func:`positive_vector` validates and
freezes them; every metric below accepts anything array-like and
validates on entry.
"""

from __future__ import annotations

import numpy as np

# entries below this are treated as boundary points
MIN_ENTRY = 1e-300


class ConeError(ValueError):
    """Raised for vectors outside the open positive orthant."""


def positive_vector(x) -> np.ndarray:
    """Return `x` as a read-only float array with strictly positive entries."""
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    if arr.size == 0:
        raise ConeError("vector must have at least one entry")
    # NaN fails both comparisons, so one min and one max cover every case
    if not (arr.min() >= MIN_ENTRY and arr.max() < np.inf):
        if not np.all(np.isfinite(arr)):
            raise ConeError(f"vector has non-finite entries: {arr}")
        raise ConeError(f"vector is not strictly positive: {arr}")
    arr.flags.writeable = False
    return arr


def nonneg_vector(x, allow_zero: bool = False) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConeError(f"vector is not a finite nonnegative vector: {arr}")
    if not allow_zero and not np.any(arr > 0):
        raise ConeError("zero vector not allowed here")
    arr.flags.writeable = False
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = positive_vector(x)
    y = positive_vector(y)
    if x.shape != y.shape:
        raise ConeError(f"dimension mismatch: {x.size} vs {y.size}")
    return x, y


def m_upper(x, y) -> float:
    """M(x/y): the least beta with x <= beta*y, i.e. max_i x_i / y_i."""
    x, y = _pair(x, y)
    return float(np.max(x / y))


def m_lower(x, y) -> float:
    """m(x/y): the largest alpha with alpha*y <= x, i.e. min_i x_i / y_i."""
    x, y = _pair(x, y)
    return float(np.min(x / y))


def thompson(x, y) -> float:
    """Thompson's metric max(log M(x/y), log M(y/x))."""
    x, y = _pair(x, y)
    r = np.log(x) - np.log(y)
    return float(max(r.max(), -r.min(), 0.0))


def hilbert(x, y) -> float:
    """Hilbert's projective metric log(M(x/y) / m(x/y)).

    Zero exactly when x and y are proportional.
    """
    x, y = _pair(x, y)
    r = np.log(x) - np.log(y)
    return float(max(r.max() - r.min(), 0.0))


def normalize_sup(x) -> np.ndarray:
    x = positive_vector(x)
    out = x / np.max(x)
    out.flags.writeable = False
    return out

"""Input validation helpers shared by the estimators.

These mirror the usual array checks but raise this package's error taxonomy
so CLI users get stable machine-readable categories.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateInput, DimMismatch


def as_float_matrix(X, name: str = "X", min_rows: int = 1, min_cols: int = 1) -> np.ndarray:
    """Coerce to a finite 2-D float64 array, enforcing minimum shape."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DegenerateInput(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows or X.shape[1] < min_cols:
        raise DegenerateInput(
            f"{name} must be at least {min_rows}x{min_cols}, got {X.shape[0]}x{X.shape[1]}"
        )
    if not np.isfinite(X).all():
        raise DegenerateInput(f"{name} contains non-finite values")
    return X


def as_float_vector(x, name: str = "x", min_size: int = 1) -> np.ndarray:
    """Coerce to a finite 1-D float64 array of at least ``min_size`` entries."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DegenerateInput(f"{name} must be 1-D, got shape {x.shape}")
    if x.size < min_size:
        raise DegenerateInput(f"{name} needs at least {min_size} entries, got {x.size}")
    if not np.isfinite(x).all():
        raise DegenerateInput(f"{name} contains non-finite values")
    return x


def as_int_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D integer array, refusing fractional values."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DegenerateInput(f"{name} must be 1-D, got shape {arr.shape}")
    out = arr.astype(np.int64, copy=True) if arr.dtype.kind in "iu" else None
    if out is None:
        f = np.asarray(arr, dtype=float)
        if not np.isfinite(f).all() or np.any(f != np.round(f)):
            raise DegenerateInput(f"{name} must contain integers")
        out = f.astype(np.int64)
    return out


def check_dim(X: np.ndarray, expected: int, name: str = "X") -> None:
    """Raise when a matrix's column count differs from the fitted dimension."""
    if X.shape[1] != expected:
        raise DimMismatch(f"{name} has {X.shape[1]} features, expected {expected}")


def check_fitted(estimator, attribute: str) -> None:
    """Raise when an estimator is used before ``fit``."""
    if getattr(estimator, attribute, None) is None:
        raise DegenerateInput(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )

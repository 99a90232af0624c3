"""Input validation helpers for the estimator facade."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError


def check_tensor4(X, name: str = "X") -> np.ndarray:
    """Validate a batched image array: 4D, positive dims, finite floats."""
    X = np.asarray(X)
    if X.ndim != 4:
        raise ShapeError(f"{name} must be 4D (batch, channels, height, width), "
                         f"got {X.ndim}D")
    if min(X.shape) < 1:
        raise ShapeError(f"{name} has an empty dimension: {X.shape}")
    if not np.issubdtype(X.dtype, np.number):
        raise ParameterError(f"{name} must be numeric, got dtype {X.dtype}")
    X = X.astype(np.float32) if X.dtype != np.float64 else X
    if not np.isfinite(X).all():
        raise ParameterError(f"{name} contains NaN or infinite values")
    return X


def check_labels(y, name: str = "y") -> np.ndarray:
    """Validate a label vector: 1D, integer-valued."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty 1D array, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.rint(np.asarray(y, dtype=np.float64))
        if not np.array_equal(rounded, y):
            raise ParameterError(f"{name} must hold integer class labels")
        y = rounded
    return y.astype(np.int64)


def check_matching_lengths(X, y) -> None:
    if X.shape[0] != y.shape[0]:
        raise ShapeError(
            f"X and y disagree on sample count: {X.shape[0]} vs {y.shape[0]}"
        )

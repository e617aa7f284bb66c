"""Input validation helpers shared by the estimator and the IO layer."""

from __future__ import annotations

import numpy as np

__all__ = ["check_binary_matrix", "check_theta"]


def check_binary_matrix(X) -> np.ndarray:
    """Validate a 2-d {0,1} response array; returns it as int8."""
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d response array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("response array must have at least one row and one column")
    if not np.all(np.isfinite(arr.astype(float))):
        raise ValueError("response array contains missing or non-finite values")
    if not np.isin(arr, (0, 1)).all():
        bad = np.argwhere(~np.isin(arr, (0, 1)))[0]
        raise ValueError(
            f"responses must be 0/1; found {arr[tuple(bad)]!r} at row {bad[0]}, col {bad[1]}"
        )
    return arr.astype(np.int8)


def check_theta(theta) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if arr.ndim != 1:
        raise ValueError("theta must be a scalar or 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("theta must be finite")
    return arr

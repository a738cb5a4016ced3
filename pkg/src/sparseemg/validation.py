"""Input validation helpers shared by estimators and engine operations."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented contract.

    ``field`` names the offending field or argument so callers (CLI,
    service) can surface structured errors.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class NotFittedError(RuntimeError):
    pass


def check_array(x, name: str, ndim: int | None = None, dtype=float) -> np.ndarray:
    """Coerce to an ndarray, rejecting non-finite values."""
    arr = np.asarray(x, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(name, f"expected {ndim}-d array, got {arr.ndim}-d")
    if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
        raise ValidationError(name, "contains non-finite values")
    return arr


def check_X_y(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_array(X, "X", ndim=2)
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValidationError("y", f"expected 1-d labels, got {y.ndim}-d")
    if len(y) != X.shape[0]:
        raise ValidationError("y", f"{len(y)} labels for {X.shape[0]} rows")
    return X, y


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )


def check_positive(value, name: str):
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(name, f"must be positive, got {value!r}")
    return value

"""Input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .exceptions import CenteringError, DimensionError, ValidationError

#: Largest column-mean magnitude (relative to the data scale) accepted as
#: "centered".
CENTERING_TOL = 1e-10


def check_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a dense 2-D float array and validate it.

    Raises
    ------
    DimensionError
        If ``a`` is not two-dimensional or is empty.
    ValidationError
        If ``a`` contains NaN or infinite entries.
    """
    try:
        arr = np.asarray(a, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce ``a`` to a 1-D float array and validate finiteness."""
    try:
        arr = np.asarray(a, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_same_rows(a: np.ndarray, b: np.ndarray, a_name: str = "X",
                    b_name: str = "Y") -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"{a_name} has {a.shape[0]} rows but {b_name} has {b.shape[0]}"
        )


def center_columns(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subtract column means; returns the centered array and the means."""
    means = a.mean(axis=0)
    return a - means, means


def check_centered(a: np.ndarray, name: str = "matrix",
                   tol: float = CENTERING_TOL) -> None:
    """Raise :class:`CenteringError` unless every column mean of ``a`` is
    negligible.

    The tolerance is scaled by the data magnitude so that large-valued but
    correctly centered data is not rejected for float round-off alone.
    """
    scale = max(1.0, float(np.abs(a).max()))
    worst = float(np.abs(a.mean(axis=0)).max())
    if worst > tol * scale:
        raise CenteringError(
            f"{name} is not column-centered: worst column mean "
            f"{worst:.3e} exceeds {tol * scale:.3e}"
        )

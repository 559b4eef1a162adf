"""Input checks shared by the estimators, in the spirit of sklearn's check_array."""
import numpy as np

from .exceptions import DescriptorTypeError, ParameterError, ShapeError
from .sensing import Pattern


def check_pattern(pattern) -> Pattern:
    if not isinstance(pattern, Pattern):
        raise ParameterError(f"expected a Pattern, got {type(pattern).__name__}")
    return pattern


def check_patches(X, side: int, *, in_range: bool = True) -> np.ndarray:
    """Return ``X`` as a float array of shape ``(n, side, side)``.

    Accepts a single ``(side, side)`` patch, a stack ``(n, side, side)``
    or row vectors ``(n, side*side)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape == (side, side):
        X = X[None]
    elif X.ndim == 2 and X.shape[1] == side * side:
        X = X.reshape(-1, side, side)
    elif X.ndim != 3 or X.shape[1:] != (side, side):
        raise ShapeError(f"expected patches of shape (n, {side}, {side}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ParameterError("patches contain NaN or inf")
    if in_range and X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise ParameterError("patch values must lie in [0, 1]")
    return X


def check_descriptors(D, m: int, *, binary: bool | None = None) -> np.ndarray:
    """Return ``D`` as a 2-D ``(n, m)`` array, checking the payload type.

    ``binary=True`` requires entries in {-1, +1}; ``binary=False`` rejects
    such payloads; ``None`` skips the check.
    """
    D = np.asarray(D)
    if D.ndim == 1:
        D = D[None]
    if D.ndim != 2 or D.shape[1] != m:
        raise ShapeError(f"expected descriptors of shape (n, {m}), got {D.shape}")
    is_sign = D.size > 0 and bool(np.all(np.abs(D) == 1))
    if binary is True and not is_sign:
        raise DescriptorTypeError("binary descriptors must contain only -1 and +1")
    if binary is False and is_sign and D.dtype.kind in "iub":
        raise DescriptorTypeError("integer sign payload passed where real measurements are expected")
    return D.astype(np.float64)

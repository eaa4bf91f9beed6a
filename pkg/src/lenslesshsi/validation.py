"""Input validation helpers shared by the library, the estimator and the CLI."""

from numbers import Integral, Real

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when arrays that must agree in shape do not."""


class NumericalError(FloatingPointError):
    """Raised when a computation produces non-finite values.

    Parameters
    ----------
    message : str
        Human-readable reason.
    diagnostics : dict, optional
        Whatever state is useful for post-mortem (iteration, step, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


def check_finite_array(x, ndim, name="array", dtype=np.float64):
    """Return ``x`` as a finite float array with exactly ``ndim`` dimensions."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_shape2(shape, name="shape"):
    """Validate a ``(ny, nx)`` pair of positive integers."""
    try:
        ny, nx = shape
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a (ny, nx) pair, got {shape!r}") from None
    for v in (ny, nx):
        if not isinstance(v, Integral) or v < 1:
            raise ValueError(f"{name} entries must be positive integers, got {shape!r}")
    return int(ny), int(nx)


def check_nonnegative(value, name):
    if not isinstance(value, Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite real >= 0, got {value!r}")
    return float(value)


def check_positive(value, name):
    if not isinstance(value, Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite real > 0, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_wavelengths(wavelengths_nm, n_lambda):
    wl = np.asarray(wavelengths_nm, dtype=np.float64).reshape(-1)
    if wl.size != n_lambda:
        raise ShapeMismatchError(
            f"expected {n_lambda} wavelengths, got {wl.size}")
    if not np.all(np.isfinite(wl)):
        raise ValueError("wavelengths contain NaN or Inf")
    if wl.size > 1 and np.any(np.diff(wl) <= 0):
        raise ValueError("wavelengths must be strictly increasing")
    return wl

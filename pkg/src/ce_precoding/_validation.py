"""Input validation helpers.

scikit-learn's ``check_array`` rejects complex input, so channels and symbol
batches are validated here instead.
"""

from __future__ import annotations

import math
import numbers

import numpy as np


def check_finite_real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_channel(h) -> np.ndarray:
    """Return ``h`` as a finite 2-D ``complex128`` array of shape (M, N)."""
    if hasattr(h, "entries"):
        h = h.entries
    a = np.asarray(h)
    if a.dtype == object:
        raise TypeError("channel entries must be numeric")
    a = np.array(a, dtype=complex)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2:
        raise ValueError(f"channel must be 2-D (users x antennas), got {a.ndim}-D")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"channel dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("channel entries must be finite")
    return a


def check_symbols(s, m: int) -> tuple[np.ndarray, bool]:
    """Coerce scaled symbols to shape (n_samples, m).

    Returns the array and whether the input was a single vector.
    """
    if hasattr(s, "values") and hasattr(s, "energies"):
        s = s.values
    a = np.array(s, dtype=complex)
    single = a.ndim <= 1
    a = np.atleast_2d(a)
    if a.ndim != 2 or a.shape[1] != m:
        raise ValueError(f"expected symbol vectors of length {m}, got shape {np.shape(s)}")
    if not np.all(np.isfinite(a)):
        raise ValueError("symbol values must be finite")
    return a, single


def check_phases(theta, n: int) -> np.ndarray:
    if hasattr(theta, "angles"):
        theta = theta.angles
    a = np.array(theta, dtype=float)
    if a.shape[-1:] != (n,):
        raise ValueError(f"expected {n} phase angles, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("phase angles must be finite")
    return a

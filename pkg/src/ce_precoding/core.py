"""Domain types shared across the package.

Complex quantities are stored as ``complex128`` numpy arrays. All types are
frozen dataclasses whose arrays are marked read-only, so instances can be
shared between workers without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_channel, check_finite_real

__all__ = [
    "Alphabet",
    "ChannelMatrix",
    "LinkBudget",
    "PhaseVector",
    "ScaledSymbolVector",
    "make_qam_alphabet",
    "scale_symbols",
    "wrap_angle",
]

TWO_PI = 2.0 * math.pi
_QAM_ORDERS = (4, 16, 64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def wrap_angle(theta):
    """Wrap angle(s) into ``[-pi, pi)``.

    Values already inside the interval are returned unchanged, which makes
    the operation exactly idempotent. Accepts scalars or arrays.

    Raises
    ------
    ValueError
        If any input is NaN or infinite.
    """
    t = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("wrap_angle requires finite input")
    inside = (t >= -math.pi) & (t < math.pi)
    w = t - TWO_PI * np.floor((t + math.pi) / TWO_PI)
    # floating-point rounding can land exactly on the excluded endpoint
    w = np.where(w >= math.pi, w - TWO_PI, w)
    w = np.where(w < -math.pi, w + TWO_PI, w)
    out = np.where(inside, t, w)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ChannelMatrix:
    """Dense ``M x N`` matrix of complex gains between N antennas and M users.

    Parameters
    ----------
    entries : array-like of shape (m, n)
        Complex channel gains; ``entries[k, i]`` is the gain from antenna
        ``i`` to user ``k``.
    """

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(check_channel(self.entries)))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def row(self, k: int) -> np.ndarray:
        """Return ``h_k`` (zero-based user index) of length N."""
        if not 0 <= k < self.m:
            raise IndexError(f"user index {k} out of range 0..{self.m - 1}")
        return self.entries[k]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return np.array(self.entries, copy=True)
        return np.array(self.entries, dtype=dtype, copy=True)


@dataclass(frozen=True)
class Alphabet:
    """Finite unit-average-energy constellation."""

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size == 0:
            raise ValueError("alphabet must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("alphabet points must be finite")
        energy = math.fsum(np.abs(pts) ** 2) / pts.size
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"alphabet average energy is {energy!r}, expected 1")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.size

    def __contains__(self, value) -> bool:
        return bool(np.any(np.abs(self.points - complex(value)) <= 1e-12))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draw i.i.d. uniform points from the alphabet."""
        idx = rng.integers(0, self.points.size, size=size)
        return self.points[idx]


def make_qam_alphabet(order: int) -> Alphabet:
    """Square QAM constellation normalised to unit average energy.

    Points are ``(a + jb) / scale`` with ``a, b`` in ``{-(L-1), ..., -1, 1,
    ..., L-1}`` for ``L = sqrt(order)``, ordered row-major by real part and
    then by imaginary part.

    Raises
    ------
    ValueError
        If ``order`` is not one of 4, 16 or 64.
    """
    if isinstance(order, bool) or order not in _QAM_ORDERS:
        raise ValueError(f"unsupported QAM order {order!r}; expected one of {_QAM_ORDERS}")
    side = math.isqrt(order)
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    pts = (re + 1j * im).ravel()
    # mean of a^2 + b^2 over the grid is 2 (L^2 - 1) / 3
    scale = math.sqrt(2.0 * (order - 1) / 3.0)
    return Alphabet(pts / scale, label=f"{order}QAM")


@dataclass(frozen=True)
class ScaledSymbolVector:
    """The M-vector ``sqrt(E_k) * u_k`` together with the energies ``E_k``."""

    values: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).ravel()
        energies = np.asarray(self.energies, dtype=float).ravel()
        if values.shape != energies.shape:
            raise ValueError(
                f"values has {values.size} entries but energies has {energies.size}"
            )
        if np.any(energies < 0) or not np.all(np.isfinite(energies)):
            raise ValueError("energies must be finite and nonnegative")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "energies", _frozen(energies))

    @property
    def m(self) -> int:
        return self.values.size

    def unit_symbols(self) -> np.ndarray:
        """Recover ``u_k``; entries with zero energy come back as 0."""
        root = np.sqrt(self.energies)
        out = np.zeros_like(self.values)
        nz = root > 0
        out[nz] = self.values[nz] / root[nz]
        return out


def scale_symbols(u, energies) -> ScaledSymbolVector:
    """Build ``sqrt(E_k) * u_k`` from unit-energy symbols and energies."""
    u = np.asarray(u, dtype=complex).ravel()
    e = np.asarray(energies, dtype=float).ravel()
    if u.shape != e.shape:
        raise ValueError(f"got {u.size} symbols but {e.size} energies")
    if not np.all(np.isfinite(e)) or np.any(e < 0):
        raise ValueError("energies must be finite and nonnegative")
    return ScaledSymbolVector(np.sqrt(e) * u, e)


@dataclass(frozen=True)
class PhaseVector:
    """Transmitted phase angles, canonicalised into ``[-pi, pi)``."""

    angles: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.angles, dtype=float))
        if a.ndim != 1 or a.size == 0:
            raise ValueError("angles must be a non-empty 1-D array")
        object.__setattr__(self, "angles", _frozen(wrap_angle(a)))

    @property
    def n(self) -> int:
        return self.angles.size

    def transmit_signal(self, pt: float) -> np.ndarray:
        """Per-antenna signal ``sqrt(pt / N) * exp(j theta_i)``."""
        return math.sqrt(pt / self.n) * np.exp(1j * self.angles)


@dataclass(frozen=True)
class LinkBudget:
    """Total transmit power over noise variance, linear scale."""

    pt_over_sigma2: float

    def __post_init__(self):
        v = check_finite_real(self.pt_over_sigma2, "pt_over_sigma2")
        if v <= 0:
            raise ValueError("pt_over_sigma2 must be strictly positive")
        object.__setattr__(self, "pt_over_sigma2", v)

    @classmethod
    def from_db(cls, db: float) -> "LinkBudget":
        return cls(10.0 ** (db / 10.0))

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.pt_over_sigma2)

    @property
    def noise_to_power(self) -> float:
        """``sigma^2 / P_T``, the noise term in the SINR denominator."""
        return 1.0 / self.pt_over_sigma2

"""Seeded i.i.d. Rayleigh channels and the large-N channel-condition diagnostics.

Random numbers come from numpy's ``PCG64`` bit generator (``default_rng``).
Gaussian variates use numpy's ziggurat transform, which is deterministic for a
given numpy release. Streams are only guaranteed within the numpy 2.x range
declared in ``pyproject.toml`` (the test suite was frozen on numpy 2.2).

Seeds for independent tasks are derived as ``default_rng([base_seed, *keys])``,
i.e. the base seed plus integer keys such as the antenna count and the trial
index. This is a pure function of the integers involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_channel, check_positive_int
from .core import ChannelMatrix

__all__ = [
    "ChannelDiagnostics",
    "derive_rng",
    "diagnostics",
    "load_channel",
    "sample_rayleigh",
    "save_channel",
]

_SEED_MASK = (1 << 64) - 1


def derive_rng(seed, *keys: int) -> np.random.Generator:
    """Generator for the task identified by ``seed`` and integer ``keys``.

    ``seed`` may itself be a tuple of integers, which is flattened in front
    of ``keys``.
    """
    parts = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    parts += keys
    for p in parts:
        if isinstance(p, bool) or not isinstance(p, (int, np.integer)):
            raise TypeError(f"seed components must be integers, got {type(p).__name__}")
        if not 0 <= int(p) <= _SEED_MASK:
            raise ValueError("seed components must be 64-bit unsigned integers")
    return np.random.default_rng([int(p) for p in parts])


def sample_rayleigh(m: int, n: int, seed: int, *keys: int) -> ChannelMatrix:
    """Draw an ``m x n`` matrix of i.i.d. CN(0, 1) gains.

    Real and imaginary parts are independent N(0, 1/2). The same ``(m, n,
    seed, keys)`` always reproduces the same matrix bit for bit.
    """
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    rng = derive_rng(seed, *keys)
    parts = rng.standard_normal((2, m, n)) * math.sqrt(0.5)
    return ChannelMatrix(parts[0] + 1j * parts[1])


@dataclass(frozen=True)
class ChannelDiagnostics:
    """Finite-N values of the three large-array channel conditions.

    Attributes
    ----------
    cnd1 : float
        ``max_{k != l} |h_k^H h_l| / N`` (0 when M == 1).
    cnd2 : float
        ``max`` over ordered 4-tuples of ``sum_i |h_k1,i||h_l1,i||h_k2,i||h_l2,i| / N^2``.
    cnd3 : ndarray of shape (M,)
        ``||h_k||^2 / N``, the finite-N estimate of the limit ``c_k``.
    """

    cnd1: float
    cnd2: float
    cnd3: np.ndarray


def diagnostics(h) -> ChannelDiagnostics:
    """Compute :class:`ChannelDiagnostics` for a channel."""
    h = check_channel(h)
    m, n = h.shape
    gram = h.conj() @ h.T
    if m > 1:
        off = np.abs(gram[~np.eye(m, dtype=bool)])
        cnd1 = float(off.max()) / n
    else:
        cnd1 = 0.0
    # all M^4 ordered tuples at once, as an order-4 moment tensor of |h|
    a = np.abs(h)
    pair = np.einsum("ki,li->kli", a, a)
    moments = np.einsum("kli,pqi->klpq", pair, pair)
    cnd2 = float(moments.max()) / n**2
    cnd3 = np.sum(a**2, axis=1) / n
    cnd3.setflags(write=False)
    return ChannelDiagnostics(cnd1=cnd1, cnd2=cnd2, cnd3=cnd3)


def save_channel(h, path) -> None:
    """Write a channel as text.

    Layout: a header line ``M N`` followed by M lines, each holding the row's
    N entries as interleaved real/imaginary pairs (row-major).
    """
    h = check_channel(h)
    m, n = h.shape
    inter = np.empty((m, 2 * n))
    inter[:, 0::2] = h.real
    inter[:, 1::2] = h.imag
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{m} {n}\n")
        np.savetxt(fh, inter, fmt="%.17g")


def load_channel(path) -> ChannelMatrix:
    """Read a channel written by :func:`save_channel`."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise ValueError(f"{path}: empty channel file")
    try:
        m, n = (int(t) for t in text[0].split())
    except ValueError:
        raise ValueError(f"{path}: first line must be 'M N'") from None
    data = np.loadtxt(text[1:], ndmin=2)
    if data.shape != (m, 2 * n):
        raise ValueError(f"{path}: expected {m} rows of {2 * n} numbers, got {data.shape}")
    return ChannelMatrix(data[:, 0::2] + 1j * data[:, 1::2])

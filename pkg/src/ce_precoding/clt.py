"""Monte-Carlo view of the received-signal range under random phases.

With i.i.d. uniform phases, the normalised received vector

    z_k = (1 / sqrt(N)) sum_i h_ki exp(j theta_i)

tends to a complex Gaussian with independent components of variance
``||h_k||^2 / (2N)`` per real dimension. Any phase sample whose ``z`` falls
inside the box of half-width ``delta`` around a target ``s`` is a phase
vector giving every user interference energy at most ``2 delta^2``.

Samples are generated in chunks; chunk ``j`` uses ``derive_rng(seed, j)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._validation import check_channel, check_positive_int, check_symbols
from .channel import ChannelDiagnostics, derive_rng
from .core import Alphabet, ScaledSymbolVector

__all__ = [
    "Box",
    "BoxHitResult",
    "GaussianityReport",
    "box_hit_counts",
    "box_hit_probability",
    "gaussianity_report",
    "iter_phase_chunks",
    "sample_z",
    "symbol_targets",
]

CHUNK = 8192
MIN_REPORT_SAMPLES = 1000


def iter_phase_chunks(n: int, n_samples: int, seed: int, chunk: int = CHUNK):
    """Yield ``(start, theta)`` blocks of uniform phases in ``[-pi, pi)``."""
    for j, start in enumerate(range(0, n_samples, chunk)):
        size = min(chunk, n_samples - start)
        yield start, derive_rng(seed, j).uniform(-math.pi, math.pi, size=(size, n))


def _z_complex(h, theta):
    return np.exp(1j * theta) @ h.T / math.sqrt(h.shape[1])


def _interleave(zc: np.ndarray) -> np.ndarray:
    out = np.empty((zc.shape[0], 2 * zc.shape[1]))
    out[:, 0::2] = zc.real
    out[:, 1::2] = zc.imag
    return out


def sample_z(h, n_samples: int, seed: int) -> np.ndarray:
    """Draw ``z`` samples under uniform random phases.

    Returns
    -------
    ndarray of shape (n_samples, 2M)
        Columns ``Re z_1, Im z_1, Re z_2, Im z_2, ...``.
    """
    h = check_channel(h)
    n_samples = check_positive_int(n_samples, "n_samples")
    blocks = [_z_complex(h, theta) for _, theta in iter_phase_chunks(h.shape[1], n_samples, seed)]
    return _interleave(np.concatenate(blocks))


@dataclass(frozen=True)
class GaussianityReport:
    means: np.ndarray
    variances: np.ndarray
    target_variances: np.ndarray
    ks_distances: np.ndarray
    max_abs_correlation: float

    @property
    def ks_max(self) -> float:
        return float(self.ks_distances.max())

    @property
    def var_ratio_max_dev(self) -> float:
        """Largest ``|variance / target - 1|`` over components."""
        return float(np.max(np.abs(self.variances / self.target_variances - 1.0)))


def gaussianity_report(samples, diag: ChannelDiagnostics) -> GaussianityReport:
    """Compare ``z`` samples with the independent Gaussian limit.

    Each component is tested against N(0, cnd3[k] / 2) with a one-sample
    Kolmogorov-Smirnov statistic.
    """
    z = np.asarray(samples, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2 * diag.cnd3.size:
        raise ValueError(f"samples must have shape (n, {2 * diag.cnd3.size})")
    if z.shape[0] < MIN_REPORT_SAMPLES:
        raise ValueError(f"need at least {MIN_REPORT_SAMPLES} samples, got {z.shape[0]}")
    target = np.repeat(np.asarray(diag.cnd3, dtype=float) / 2.0, 2)
    ks = np.array([
        stats.kstest(z[:, c], stats.norm(0.0, math.sqrt(target[c])).cdf).statistic
        for c in range(z.shape[1])
    ])
    if z.shape[1] > 1:
        corr = np.corrcoef(z, rowvar=False)
        off = np.abs(corr[~np.eye(z.shape[1], dtype=bool)])
        max_corr = float(off.max())
    else:
        max_corr = 0.0
    return GaussianityReport(
        means=z.mean(axis=0),
        variances=z.var(axis=0, ddof=1),
        target_variances=target,
        ks_distances=ks,
        max_abs_correlation=max_corr,
    )


@dataclass(frozen=True)
class Box:
    """Axis-aligned box of half-width ``half_width`` around ``center``."""

    center: ScaledSymbolVector
    half_width: float

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError("half_width must be positive and finite")


@dataclass(frozen=True)
class BoxHitResult:
    """Hit-rate estimate with a 95% Wilson interval.

    ``max_hit_residual`` is the largest per-user squared interference over
    all hits, recomputed directly from the hitting phases (0 with no hits).
    """

    probability: float
    ci_low: float
    ci_high: float
    hits: int
    n_samples: int
    max_hit_residual: float


def _wilson(hits, n, confidence=0.95):
    ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def box_hit_counts(h, centers, delta: float, n_samples: int, seed: int):
    """Count box hits for many targets using one shared set of phase samples.

    Every hit is certified: the residual ``received - center`` is recomputed
    from the sampled phases and its largest per-user squared magnitude is
    tracked per target.

    Parameters
    ----------
    h : array-like of shape (M, N)
    centers : array-like of shape (T, M)
        Scaled symbol vectors.
    delta : float
    n_samples : int
    seed : int

    Returns
    -------
    hits : ndarray of shape (T,)
    max_residual : ndarray of shape (T,)
    """
    h = check_channel(h)
    centers, _ = check_symbols(centers, h.shape[0])
    n_samples = check_positive_int(n_samples, "n_samples")
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError("delta must be positive and finite")
    hits = np.zeros(centers.shape[0], dtype=np.int64)
    worst = np.zeros(centers.shape[0])
    c_re, c_im = centers.real, centers.imag
    for _, theta in iter_phase_chunks(h.shape[1], n_samples, seed):
        z = _z_complex(h, theta)
        inside = np.all(
            (np.abs(z.real[np.newaxis, :, :] - c_re[:, np.newaxis, :]) <= delta)
            & (np.abs(z.imag[np.newaxis, :, :] - c_im[:, np.newaxis, :]) <= delta),
            axis=2,
        )
        hits += inside.sum(axis=1)
        for t, s_idx in zip(*np.nonzero(inside)):
            phasor = np.exp(1j * theta[s_idx])
            v = np.array([np.sum(h[k] * phasor) for k in range(h.shape[0])]) / math.sqrt(h.shape[1])
            worst[t] = max(worst[t], float(np.max(np.abs(v - centers[t]) ** 2)))
    return hits, worst


def box_hit_probability(h, box: Box, n_samples: int, seed: int) -> BoxHitResult:
    """Fraction of uniform-phase samples whose ``z`` lands in ``box``."""
    hits, worst = box_hit_counts(h, box.center.values[np.newaxis, :], box.half_width, n_samples, seed)
    k = int(hits[0])
    lo, hi = _wilson(k, n_samples)
    return BoxHitResult(k / n_samples, lo, hi, k, n_samples, float(worst[0]))


def symbol_targets(alphabet: Alphabet, m: int, energies, limit: int = 256, seed: int = 0) -> np.ndarray:
    """Scaled symbol vectors covering ``alphabet^m``.

    All ``|alphabet|^m`` combinations are returned when there are at most
    ``limit`` of them, otherwise ``limit`` distinct vectors chosen at random.
    """
    e = np.sqrt(np.broadcast_to(np.asarray(energies, dtype=float), (m,)))
    total = len(alphabet) ** m
    if total <= limit:
        combos = np.array(list(itertools.product(alphabet.points, repeat=m)))
    else:
        rng = derive_rng(seed)
        seen: dict[tuple, None] = {}
        while len(seen) < limit:
            seen.setdefault(tuple(rng.integers(0, len(alphabet), size=m)), None)
        combos = alphabet.points[np.array(list(seen))]
    return combos * e

"""Constant-envelope precoding by cyclic exact coordinate descent.

Every antenna transmits ``sqrt(P_T / N) * exp(j theta_i)``, so the only
degrees of freedom are the phases. For scaled symbols ``s_k = sqrt(E_k) u_k``
the precoder minimises the total squared interference

    g(theta) = sum_k | (1 / sqrt(N)) sum_i h_ki exp(j theta_i) - s_k |^2

one phase at a time. With all other phases fixed, ``g`` is a sinusoid in the
free phase and its minimiser has a closed form, so every update is exact and
``g`` never increases.

Schedule: antennas are visited cyclically ``0, 1, ..., N-1, 0, ...``. With
``sweeps_l = L`` the solver performs at most ``L * M * N`` single-angle
updates (``L * M`` full passes), each costing O(M) thanks to incrementally
maintained received sums.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_channel, check_phases, check_symbols
from .core import PhaseVector, wrap_angle

__all__ = [
    "CEPrecoder",
    "SolveReport",
    "SolverConfig",
    "coordinate_update",
    "objective",
    "received",
    "residuals",
    "solve",
    "solve_batch",
]

_DEGENERATE = 1e-300
# objective traces longer than this are recorded once per pass instead
_MAX_TRACE = 1_000_000


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget and initialisation of the phase solver.

    Parameters
    ----------
    sweeps_l : int
        Budget multiplier ``L``; at most ``L * M * N`` single-angle updates.
    early_stop_rel_tol : float
        Stop once a full pass over the N antennas lowers the objective by a
        relative amount ``<= early_stop_rel_tol``. ``0`` disables early stopping.
    init : {"zeros", "random"} or array-like of shape (N,)
        Starting phases. ``"random"`` draws uniform phases from ``seed``.
    seed : int, optional
        Seed for ``init="random"``.
    """

    sweeps_l: int = 10
    early_stop_rel_tol: float = 1e-8
    init: object = "zeros"
    seed: int | None = None

    def __post_init__(self):
        if isinstance(self.sweeps_l, bool) or not isinstance(self.sweeps_l, numbers.Integral):
            raise TypeError("sweeps_l must be an integer")
        if self.sweeps_l < 1:
            raise ValueError("sweeps_l must be >= 1")
        tol = float(self.early_stop_rel_tol)
        if not math.isfinite(tol) or tol < 0:
            raise ValueError("early_stop_rel_tol must be finite and >= 0")
        if isinstance(self.init, str):
            if self.init not in ("zeros", "random"):
                raise ValueError(f"unknown init {self.init!r}")
        else:
            object.__setattr__(self, "init", PhaseVector(check_phases(self.init, np.size(self.init)).ravel()).angles)

    def initial_angles(self, n: int, batch: int = 1) -> np.ndarray:
        if isinstance(self.init, str):
            if self.init == "zeros":
                return np.zeros((batch, n))
            rng = np.random.default_rng(self.seed)
            return rng.uniform(-math.pi, math.pi, size=(batch, n))
        if self.init.size != n:
            raise ValueError(f"provided init has {self.init.size} angles, channel has {n} antennas")
        return np.tile(self.init, (batch, 1))


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve.

    Attributes
    ----------
    theta : PhaseVector
        Final phases.
    objective_trace : ndarray
        Objective after every single-angle update (after every full pass for
        very long runs).
    residuals : ndarray of shape (M,)
        Interference terms ``s_hat_k`` from the incrementally maintained sums.
    updates_performed : int
    initial_objective : float
    passes : int
        Full passes over the antennas actually run.
    """

    theta: PhaseVector
    objective_trace: np.ndarray
    residuals: np.ndarray
    updates_performed: int
    initial_objective: float
    passes: int = 0
    trace_per_pass: bool = field(default=False, repr=False)

    @property
    def objective(self) -> float:
        return float(np.sum(np.abs(self.residuals) ** 2))


def _check_problem(h, theta, s):
    h = check_channel(h)
    theta = check_phases(theta, h.shape[1])
    if theta.ndim != 1:
        raise ValueError("theta must be a single phase vector")
    s, _ = check_symbols(s, h.shape[0])
    if s.shape[0] != 1:
        raise ValueError("expected a single scaled symbol vector")
    return h, theta, s[0]


def received(h, theta) -> np.ndarray:
    """Noise-free received values ``(1 / sqrt(N)) sum_i h_ki exp(j theta_i)``.

    ``theta`` may be a single vector of shape (N,) or a batch (B, N).
    """
    h = check_channel(h)
    theta = check_phases(theta, h.shape[1])
    return np.exp(1j * theta) @ h.T / math.sqrt(h.shape[1])


def residuals(h, theta, s) -> np.ndarray:
    """Per-user interference terms ``received - s``."""
    h, theta, s = _check_problem(h, theta, s)
    return received(h, theta) - s


def objective(h, theta, s) -> float:
    """Total squared interference ``g(theta)`` summed over users."""
    return float(np.sum(np.abs(residuals(h, theta, s)) ** 2))


def coordinate_update(h, theta, s, index: int) -> float:
    """Exact minimiser of ``g`` over the phase at antenna ``index`` (0-based).

    Returns ``pi + arg(sum_k conj(h_k,index) a_k / sqrt(N))`` wrapped to
    ``[-pi, pi)``, where ``a_k`` is user k's interference with that antenna
    switched off. When the sum vanishes the objective does not depend on the
    angle and the current value is returned.
    """
    h, theta, s = _check_problem(h, theta, s)
    n = h.shape[1]
    if isinstance(index, bool) or not isinstance(index, numbers.Integral) or not 0 <= index < n:
        raise IndexError(f"antenna index {index!r} out of range 0..{n - 1}")
    col = h[:, index] / math.sqrt(n)
    a = received(h, theta) - col * np.exp(1j * theta[index]) - s
    c = np.vdot(col, a)
    if abs(c) < _DEGENERATE:
        return float(theta[index])
    return wrap_angle(math.pi + float(np.angle(c)))


def _descend(hn, targets, theta, n_passes, tol, record):
    """Batched cyclic coordinate descent; mutates and returns ``theta``.

    ``hn`` is the channel already divided by sqrt(N); ``targets`` and
    ``theta`` hold one problem per row.
    """
    batch, n = theta.shape
    x = np.exp(1j * theta)
    err = x @ hn.T - targets
    g_prev = np.sum(err.real**2 + err.imag**2, axis=1)
    initial = g_prev.copy()
    active = np.ones(batch, dtype=bool)
    all_active = True
    updates = np.zeros(batch, dtype=np.int64)
    hconj = hn.conj()
    cols = [hn[:, i] for i in range(n)]
    per_update = record and n_passes * n <= _MAX_TRACE
    trace = []
    passes = 0
    for _ in range(n_passes):
        passes += 1
        for i in range(n):
            col = cols[i]
            xi = x[:, i]
            a = err - xi[:, None] * col
            c = a @ hconj[:, i]
            phi = np.pi + np.angle(c)
            phi = np.where(phi >= np.pi, phi - 2 * np.pi, phi)
            ok = np.abs(c) >= _DEGENERATE
            if all_active and ok.all():
                xn = np.exp(1j * phi)
                theta[:, i] = phi
                updates += 1
                err = a + xn[:, None] * col
            else:
                move = ok & active
                xn = np.where(move, np.exp(1j * phi), xi)
                theta[:, i] = np.where(move, phi, theta[:, i])
                updates += active
                err = np.where(active[:, None], a + xn[:, None] * col, err)
            x[:, i] = xn
            if per_update:
                trace.append(np.sum(err.real**2 + err.imag**2, axis=1))
        g_now = np.sum(err.real**2 + err.imag**2, axis=1)
        if record and not per_update:
            trace.append(g_now)
        if tol > 0:
            stalled = (g_prev - g_now) <= tol * g_prev
            active &= ~stalled
            all_active = bool(active.all())
            if not active.any():
                break
        g_prev = g_now
    trace = np.array(trace).T if record else None
    return theta, err, updates, initial, trace, passes, not per_update


def solve_batch(h, s, cfg: SolverConfig | None = None):
    """Solve many symbol vectors on one channel.

    Each row is iterated exactly as :func:`solve` would, rows frozen
    individually once they meet the stopping rule.

    Parameters
    ----------
    h : array-like of shape (M, N)
    s : array-like of shape (B, M)
        Scaled symbol vectors.

    Returns
    -------
    theta : ndarray of shape (B, N)
    resid : ndarray of shape (B, M)
        Incrementally maintained interference terms.
    updates : ndarray of shape (B,)
    """
    cfg = cfg or SolverConfig()
    h = check_channel(h)
    s, _ = check_symbols(s, h.shape[0])
    m, n = h.shape
    theta = cfg.initial_angles(n, s.shape[0])
    theta, err, updates, *_ = _descend(
        h / math.sqrt(n), s, theta, cfg.sweeps_l * m, cfg.early_stop_rel_tol, record=False
    )
    return theta, err, updates


def solve(h, s, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the precoder on one scaled symbol vector and report the trace."""
    cfg = cfg or SolverConfig()
    h = check_channel(h)
    s, single = check_symbols(s, h.shape[0])
    if s.shape[0] != 1:
        raise ValueError("solve takes one symbol vector; use solve_batch for several")
    m, n = h.shape
    theta = cfg.initial_angles(n, 1)
    theta, err, updates, initial, trace, passes, per_pass = _descend(
        h / math.sqrt(n), s, theta, cfg.sweeps_l * m, cfg.early_stop_rel_tol, record=True
    )
    return SolveReport(
        theta=PhaseVector(theta[0]),
        objective_trace=trace[0],
        residuals=err[0],
        updates_performed=int(updates[0]),
        initial_objective=float(initial[0]),
        passes=passes,
        trace_per_pass=per_pass,
    )


class CEPrecoder(BaseEstimator):
    """Constant-envelope precoder with a scikit-learn style interface.

    ``fit`` takes the channel, ``transform`` maps scaled symbol vectors to
    transmit phases and ``predict`` returns what the users receive (without
    noise), which approximates the requested symbols.

    Parameters
    ----------
    sweeps_l : int, default=10
        Budget multiplier; at most ``sweeps_l * M * N`` updates per vector.
    early_stop_rel_tol : float, default=1e-8
    init : {"zeros", "random"} or array-like, default="zeros"
    random_state : int, optional
        Seed used when ``init="random"``.

    Attributes
    ----------
    channel_ : ndarray of shape (n_users_, n_antennas_)
    n_users_ : int
    n_antennas_ : int
    n_updates_ : ndarray
        Update counts from the most recent ``transform``.
    """

    def __init__(self, sweeps_l=10, early_stop_rel_tol=1e-8, init="zeros", random_state=None):
        self.sweeps_l = sweeps_l
        self.early_stop_rel_tol = early_stop_rel_tol
        self.init = init
        self.random_state = random_state

    @classmethod
    def from_config(cls, cfg: SolverConfig) -> "CEPrecoder":
        return cls(cfg.sweeps_l, cfg.early_stop_rel_tol, cfg.init, cfg.seed)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.sweeps_l, self.early_stop_rel_tol, self.init, self.random_state)

    def fit(self, X, y=None):
        """Store the ``(M, N)`` channel matrix ``X``."""
        self.solver_config()
        self.channel_ = check_channel(X)
        self.n_users_, self.n_antennas_ = self.channel_.shape
        return self

    def transform(self, X):
        """Phases of shape (n_samples, N) for scaled symbols of shape (n_samples, M)."""
        check_is_fitted(self, "channel_")
        theta, _, updates = solve_batch(self.channel_, X, self.solver_config())
        self.n_updates_ = updates
        return theta

    def fit_transform(self, X, y):
        """Fit on channel ``X`` and precode the symbol batch ``y``."""
        return self.fit(X).transform(y)

    def predict(self, X):
        """Noise-free received values for the phases chosen for ``X``."""
        return received(self.channel_, self.transform(X))

    def solve(self, s) -> SolveReport:
        """Full :class:`SolveReport` for one scaled symbol vector."""
        check_is_fitted(self, "channel_")
        return solve(self.channel_, s, self.solver_config())

    def score(self, X, y=None):
        """Negative mean total interference energy over the rows of ``X``."""
        check_is_fitted(self, "channel_")
        X, _ = check_symbols(X, self.n_users_)
        err = self.predict(X) - X
        return -float(np.mean(np.sum(np.abs(err) ** 2, axis=1)))

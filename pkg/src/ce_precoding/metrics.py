"""Interference energy, SINR, achievable sum-rate and the cooperative bound.

Noise is never sampled: only its variance enters, through ``P_T / sigma^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_channel, check_finite_real, check_positive_int
from .channel import derive_rng
from .core import Alphabet, LinkBudget
from .precoder import SolverConfig, solve_batch

__all__ = [
    "GAUSSIAN",
    "BracketError",
    "CeRateModel",
    "MuiEstimate",
    "RateResult",
    "RequiredPower",
    "ce_sum_rate",
    "coop_upper_bound",
    "draw_symbols",
    "ergodic_mui",
    "mui_energy",
    "mui_table",
    "required_power_for_rate",
    "sinr",
    "sum_rate_from_mui",
    "waterfill",
]

GAUSSIAN = "gaussian"
GAUSSIAN_CLIP = 6.0
RATE_FORMULAS = ("shannon", "literal")


@dataclass(frozen=True)
class MuiEstimate:
    """Monte-Carlo estimate of the per-user interference energy.

    ``std_err`` is the standard error over symbol draws when one channel is
    used, and over per-channel means for an ensemble.
    """

    per_user: np.ndarray
    std_err: np.ndarray
    n_symbol_draws: int
    n_channel_draws: int = 1

    @property
    def mean(self) -> float:
        return math.fsum(self.per_user) / self.per_user.size

    @property
    def mean_std_err(self) -> float:
        return float(np.sqrt(np.sum(self.std_err**2))) / self.per_user.size


@dataclass(frozen=True)
class RateResult:
    sum_rate_bpcu: float
    per_user_rate_bpcu: np.ndarray
    gamma: np.ndarray


def _column_means(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) / a.shape[0] for col in a.T])


def _std_err(a: np.ndarray) -> np.ndarray:
    if a.shape[0] < 2:
        return np.zeros(a.shape[1])
    return np.std(a, axis=0, ddof=1) / math.sqrt(a.shape[0])


def draw_symbols(source, m: int, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-energy symbols of shape (n_draws, m).

    ``source`` is an :class:`Alphabet` (uniform draws) or ``"gaussian"`` for
    CN(0, 1) symbols whose magnitude is clipped at 6.
    """
    if isinstance(source, Alphabet):
        return source.sample(rng, (n_draws, m))
    if source != GAUSSIAN:
        raise ValueError(f"unknown symbol source {source!r}")
    u = (rng.standard_normal((n_draws, m)) + 1j * rng.standard_normal((n_draws, m))) / math.sqrt(2)
    mag = np.abs(u)
    big = mag > GAUSSIAN_CLIP
    u[big] *= GAUSSIAN_CLIP / mag[big]
    return u


def _energies(energies, m: int) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    if e.ndim == 0:
        e = np.full(m, float(e))
    if e.shape != (m,):
        raise ValueError(f"expected {m} energies, got {e.size}")
    if not np.all(np.isfinite(e)) or np.any(e < 0):
        raise ValueError("energies must be finite and nonnegative")
    return e


def _draw_mui(h, source, energies, cfg, n_draws, rng):
    m = h.shape[0]
    u = draw_symbols(source, m, n_draws, rng)
    _, err, updates = solve_batch(h, u * np.sqrt(energies), cfg)
    return err.real**2 + err.imag**2, int(updates.sum())


def mui_energy(h, source, energies, cfg: SolverConfig | None = None, n_draws: int = 100, seed: int = 0) -> MuiEstimate:
    """Estimate ``E_u |s_hat_k|^2`` on one channel.

    Draws ``n_draws`` symbol vectors from ``source``, precodes each and
    averages the squared interference per user.
    """
    h = check_channel(h)
    n_draws = check_positive_int(n_draws, "n_draws")
    e = _energies(energies, h.shape[0])
    sq, _ = _draw_mui(h, source, e, cfg, n_draws, derive_rng(seed))
    return MuiEstimate(_column_means(sq), _std_err(sq), n_draws, 1)


def _channel_mui(h, source, e, cfg, n_draws, seed, index):
    sq, updates = _draw_mui(h, source, e, cfg, n_draws, derive_rng(seed, index))
    return _column_means(sq), updates


def mui_table(
    channels: Sequence,
    source,
    energies,
    cfg: SolverConfig | None = None,
    n_draws: int = 50,
    seed: int = 0,
    n_jobs: int | None = None,
    return_updates: bool = False,
):
    """Per-channel interference energies, shape (n_channels, M).

    Channel ``c`` uses symbols drawn from ``derive_rng(seed, c)``. The unit
    symbols do not depend on ``energies``, so tables computed for different
    energies share their random draws.
    """
    if len(channels) == 0:
        raise ValueError("channel ensemble is empty")
    hs = [check_channel(h) for h in channels]
    e = _energies(energies, hs[0].shape[0])
    n_draws = check_positive_int(n_draws, "n_draws")
    if n_jobs in (None, 1):
        out = [_channel_mui(h, source, e, cfg, n_draws, seed, c) for c, h in enumerate(hs)]
    else:
        out = Parallel(n_jobs=n_jobs)(
            delayed(_channel_mui)(h, source, e, cfg, n_draws, seed, c) for c, h in enumerate(hs)
        )
    table = np.array([o[0] for o in out])
    if return_updates:
        return table, sum(o[1] for o in out)
    return table


def ergodic_mui(channels, source, energies, cfg=None, n_draws=50, seed=0, n_jobs=None) -> MuiEstimate:
    """Ensemble average ``E_H E_u |s_hat_k|^2`` with channel-level standard errors."""
    table = mui_table(channels, source, energies, cfg, n_draws, seed, n_jobs)
    return MuiEstimate(_column_means(table), _std_err(table), n_draws, table.shape[0])


def sinr(mui_k, e_k, budget: LinkBudget):
    """``e_k / (mui_k + sigma^2 / P_T)``; broadcasts over arrays."""
    mui = np.asarray(mui_k, dtype=float)
    e = np.asarray(e_k, dtype=float)
    if not (np.all(np.isfinite(mui)) and np.all(np.isfinite(e))):
        raise ValueError("sinr inputs must be finite")
    if np.any(mui < 0) or np.any(e < 0):
        raise ValueError("mui and energy must be nonnegative")
    g = e / (mui + budget.noise_to_power)
    return float(g) if g.ndim == 0 else g


def sum_rate_from_mui(table, energies, budget: LinkBudget, formula: str = "shannon") -> RateResult:
    """Ergodic achievable rates from a per-channel interference table.

    ``formula="shannon"`` uses ``log2(1 + gamma)``; ``"literal"`` uses
    ``log2(gamma)``, which can be negative.
    """
    if formula not in RATE_FORMULAS:
        raise ValueError(f"formula must be one of {RATE_FORMULAS}")
    table = np.atleast_2d(np.asarray(table, dtype=float))
    e = _energies(energies, table.shape[1])
    gamma = sinr(table, e[np.newaxis, :], budget)
    with np.errstate(divide="ignore"):
        rates = np.log2(1.0 + gamma) if formula == "shannon" else np.log2(gamma)
    per_user = _column_means(rates)
    return RateResult(math.fsum(per_user), per_user, _column_means(gamma))


def ce_sum_rate(
    channel_ensemble,
    energies,
    budget: LinkBudget,
    cfg: SolverConfig | None = None,
    n_symbol_draws: int = 50,
    seed: int = 0,
    formula: str = "shannon",
    n_jobs: int | None = None,
) -> RateResult:
    """Achievable ergodic sum-rate of the CE precoder with Gaussian symbols."""
    if len(channel_ensemble) == 0:
        raise ValueError("channel ensemble is empty")
    m = check_channel(channel_ensemble[0]).shape[0]
    e = _energies(energies, m)
    if np.ptp(e) != 0:
        raise ValueError("ce_sum_rate requires equal energies for all users")
    table = mui_table(channel_ensemble, GAUSSIAN, e, cfg, n_symbol_draws, seed, n_jobs)
    return sum_rate_from_mui(table, e, budget, formula)


def waterfill(gains, total_power: float, noise: float = 1.0):
    """Water-filling over parallel channels.

    Parameters
    ----------
    gains : array-like
        Nonnegative power gains ``lambda_i`` (squared singular values).
    total_power : float
    noise : float

    Returns
    -------
    powers : ndarray
        ``max(0, mu - noise / lambda_i)``, summing to ``total_power``.
    mu : float
        Water level, found by bisection and then polished in closed form on
        the resulting active set.
    """
    g = np.asarray(gains, dtype=float).ravel()
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and nonnegative")
    total_power = check_finite_real(total_power, "total_power")
    if total_power < 0:
        raise ValueError("total_power must be nonnegative")
    powers = np.zeros_like(g)
    usable = g > 0
    if not usable.any() or total_power == 0:
        return powers, 0.0
    floor = noise / g[usable]

    def filled(mu):
        return np.maximum(0.0, mu - floor).sum()

    lo, hi = 0.0, total_power + floor.max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if filled(mid) < total_power:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    active = floor < mu
    mu_exact = (total_power + floor[active].sum()) / active.sum()
    if np.array_equal(floor < mu_exact, active):
        mu = mu_exact
    powers[usable] = np.maximum(0.0, mu - floor)
    return powers, float(mu)


def coop_upper_bound(h, budget: LinkBudget) -> float:
    """Sum-capacity bound with cooperating receivers, in bpcu.

    Treats the broadcast channel as one ``N x M`` point-to-point link with
    total power ``P_T`` and water-fills over the singular modes of ``h``.
    """
    h = check_channel(h)
    sv = np.linalg.svd(h, compute_uv=False)
    gains = sv**2
    if not np.any(gains > 0):
        return 0.0
    powers, _ = waterfill(gains, budget.pt_over_sigma2, 1.0)
    return math.fsum(np.log2(1.0 + powers * gains))


class BracketError(ValueError):
    """The power bracket does not reach the target rate."""

    def __init__(self, target, low_db, high_db, low_rate, high_rate):
        self.target = target
        self.low_rate = low_rate
        self.high_rate = high_rate
        super().__init__(
            f"target {target} bpcu not reached in [{low_db}, {high_db}] dB: "
            f"rate({low_db} dB)={low_rate:.6g}, rate({high_db} dB)={high_rate:.6g}"
        )


@dataclass(frozen=True)
class RequiredPower:
    """Smallest ``P_T / sigma^2`` (dB) reaching a rate target.

    ``at_floor`` is set when the lower bracket end already meets the target,
    in which case ``db`` is that end.
    """

    db: float
    at_floor: bool = False
    evaluations: int = 0


def required_power_for_rate(
    target_per_user_bpcu: float,
    rate_fn: Callable[[float], float],
    bracket: tuple[float, float] = (-20.0, 40.0),
    tol_db: float = 0.05,
) -> RequiredPower:
    """Bisection in dB for the least power at which ``rate_fn`` meets the target.

    ``rate_fn`` maps a power in dB to a per-user rate and must be
    non-decreasing. The returned power achieves the target and lies within
    ``tol_db`` of the smallest power that does.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy low < high")
    r_lo = rate_fn(lo)
    if r_lo >= target_per_user_bpcu:
        return RequiredPower(lo, at_floor=True, evaluations=1)
    r_hi = rate_fn(hi)
    if r_hi < target_per_user_bpcu:
        raise BracketError(target_per_user_bpcu, lo, hi, r_lo, r_hi)
    evals = 2
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        evals += 1
        if rate_fn(mid) >= target_per_user_bpcu:
            hi = mid
        else:
            lo = mid
    return RequiredPower(hi, at_floor=False, evaluations=evals)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a, b, iters):
    """Golden-section search for a minimum of ``f`` on ``[a, b]``; returns the best probe."""
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


class CeRateModel:
    """CE sum-rate on a fixed ensemble, maximised over the common energy.

    Interference tables are cached per energy; because the random draws are
    shared, the rate is a deterministic function of ``(E, P_T / sigma^2)``.

    Parameters
    ----------
    channels : sequence of channel matrices
    cfg : SolverConfig, optional
    n_symbol_draws : int
    seed : int
    energy_grid : array-like, optional
        Coarse grid of energies; 20 log-spaced points in ``[1e-2, 1e3]`` by
        default. The best grid point is refined by golden-section search in
        log-energy between its neighbours.
    golden_iters : int
    """

    def __init__(self, channels, cfg=None, n_symbol_draws=50, seed=0, energy_grid=None,
                 golden_iters=12, formula="shannon", n_jobs=None):
        self.channels = [check_channel(h) for h in channels]
        if not self.channels:
            raise ValueError("channel ensemble is empty")
        self.m = self.channels[0].shape[0]
        self.cfg = cfg
        self.n_symbol_draws = n_symbol_draws
        self.seed = seed
        grid = np.logspace(-2, 3, 20) if energy_grid is None else np.asarray(energy_grid, float)
        self.energy_grid = np.sort(grid)
        self.golden_iters = golden_iters
        self.formula = formula
        self.n_jobs = n_jobs
        self._cache: dict[float, np.ndarray] = {}
        self.solver_updates = 0

    def mui(self, energy: float) -> np.ndarray:
        key = float(energy)
        if key not in self._cache:
            table, updates = mui_table(self.channels, GAUSSIAN, key, self.cfg, self.n_symbol_draws,
                                       self.seed, self.n_jobs, return_updates=True)
            self._cache[key] = table
            self.solver_updates += updates
        return self._cache[key]

    def rate(self, energy: float, budget: LinkBudget) -> RateResult:
        return sum_rate_from_mui(self.mui(energy), np.full(self.m, float(energy)), budget, self.formula)

    def _refine(self, values, f):
        """Minimise ``f(log E)`` around the smallest entry of ``values`` on the grid."""
        grid = self.energy_grid
        i = int(np.argmin(values))
        best_t, best_v = math.log(grid[i]), values[i]
        if grid.size >= 3:
            a = math.log(grid[max(i - 1, 0)])
            b = math.log(grid[min(i + 1, grid.size - 1)])
            t, v = _golden_min(f, a, b, self.golden_iters)
            if v < best_v:
                best_t, best_v = t, v
        return math.exp(best_t), best_v

    def best(self, budget: LinkBudget) -> tuple[float, RateResult]:
        """Energy maximising the sum-rate at ``budget`` and the resulting rate."""
        rates = [-self.rate(e, budget).sum_rate_bpcu for e in self.energy_grid]
        e_best, _ = self._refine(rates, lambda t: -self.rate(math.exp(t), budget).sum_rate_bpcu)
        return e_best, self.rate(e_best, budget)

    def required_power(self, target_per_user_bpcu, bracket=(-20.0, 40.0), tol_db=0.05):
        """Least ``P_T / sigma^2`` (dB) at which some common energy meets the target.

        Uses ``min_P {max_E R(E, P) >= t} = min_E min_P {R(E, P) >= t}``: the
        inner power bisection reuses one interference table per energy, so
        only the outer search over E runs the solver.

        Returns
        -------
        RequiredPower
        energy : float
            The minimising common energy.
        """
        tol = min(tol_db, 1e-3)
        rates_at = {}
        calls = [0]

        def p_star(energy):
            calls[0] += 1
            def rate(db):
                return self.rate(energy, LinkBudget.from_db(db)).sum_rate_bpcu / self.m

            try:
                res = required_power_for_rate(target_per_user_bpcu, rate, bracket, tol)
            except BracketError as exc:
                rates_at[energy] = (exc.low_rate, exc.high_rate)
                return math.inf, False
            return res.db, res.at_floor

        grid = self.energy_grid
        values = [p_star(e)[0] for e in grid]
        if not np.isfinite(values).any():
            lo_rate, hi_rate = max(rates_at.values(), key=lambda r: r[1])
            raise BracketError(target_per_user_bpcu, bracket[0], bracket[1], lo_rate, hi_rate)
        e_best, _ = self._refine(values, lambda t: p_star(math.exp(t))[0])
        db, at_floor = p_star(e_best)
        return RequiredPower(db, at_floor=at_floor, evaluations=calls[0]), e_best

    def per_user_rate_db(self, db: float) -> float:
        """Optimised per-user rate at ``P_T / sigma^2 = db`` (dB)."""
        return self.best(LinkBudget.from_db(db))[1].sum_rate_bpcu / self.m

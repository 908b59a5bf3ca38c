"""Experiment drivers: interference, energy and power scaling with array size.

Each driver is a pure function of its :class:`ExperimentConfig`. Random
streams are keyed on ``base_seed``:

* channel ``c`` at ``N`` antennas: ``derive_rng(base_seed, 0, N, c)``
* symbol draws for that channel:  ``derive_rng(base_seed, 1, N, c)``
* phase samples for the CLT check: ``derive_rng(base_seed, 2, N, chunk)``

so the rows for one ``N`` do not depend on which other ``N`` are run.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import diagnostics, sample_rayleigh
from .clt import box_hit_counts, gaussianity_report, sample_z, symbol_targets
from .core import Alphabet, LinkBudget, make_qam_alphabet
from .metrics import (
    GAUSSIAN,
    CeRateModel,
    coop_upper_bound,
    mui_table,
    required_power_for_rate,
)
from .precoder import SolverConfig

__all__ = [
    "CSV_HEADERS",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentRow",
    "VARIANTS",
    "format_csv",
    "parse_alphabet",
    "run_clt_check",
    "run_estar_vs_n",
    "run_experiment",
    "run_mui_vs_n",
    "run_power_vs_n",
    "write_csv",
]

log = logging.getLogger(__name__)

CHANNEL_STREAM, SYMBOL_STREAM, PHASE_STREAM = 0, 1, 2

CSV_HEADERS = {
    "mui-vs-n": ["variant", "m", "n", "alphabet", "ek", "n_channels", "n_symbol_draws",
                 "mui_mean", "mui_stderr", "seed", "wall_time_s"],
    "estar-vs-n": ["variant", "m", "n", "alphabet", "target_i", "e_star", "achieved_i",
                   "seed", "wall_time_s"],
    "power-vs-n": ["variant", "m", "n", "target_rate_bpcu", "pt_db_ce", "pt_db_coop", "gap_db",
                   "seed", "wall_time_s"],
    "clt-check": ["variant", "m", "n", "delta", "ks_max", "var_ratio_max_dev", "corr_max",
                  "box_hit_fraction", "seed", "wall_time_s"],
}
CSV_FILENAMES = {
    "mui-vs-n": "mui_vs_n.csv",
    "estar-vs-n": "estar_vs_n.csv",
    "power-vs-n": "power_vs_n.csv",
    "clt-check": "clt_check.csv",
}
VARIANTS = tuple(CSV_HEADERS)


class ExperimentError(RuntimeError):
    """A driver could not produce a row (e.g. a bisection bracket failed)."""


def parse_alphabet(label: str):
    """Map ``"4QAM"``, ``"16QAM"``, ``"64QAM"`` or ``"gaussian"`` to a symbol source."""
    if label.lower() == GAUSSIAN:
        return GAUSSIAN
    if label.upper().endswith("QAM"):
        try:
            return make_qam_alphabet(int(label[:-3]))
        except ValueError:
            pass
    raise ValueError(f"unknown alphabet {label!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run.

    Only the fields relevant to ``variant`` are used; ``target_mui`` may hold
    several interference levels for the energy experiment.
    """

    variant: str = "mui-vs-n"
    m: int = 12
    n_list: tuple = (24, 48, 96, 192)
    alphabet: str = "16QAM"
    energies: float = 1.0
    target_mui: tuple = (0.1,)
    target_rate_bpcu: float = 2.0
    n_channels: int = 50
    n_symbol_draws: int = 50
    solver: SolverConfig = field(default_factory=SolverConfig)
    base_seed: int = 0
    delta: float = 0.3
    n_phase_samples: int = 100_000
    max_targets: int = 256
    estar_bracket: tuple = (0.02, 1.0)
    estar_rel_tol: float = 0.05
    power_bracket_db: tuple = (-30.0, 30.0)
    power_tol_db: float = 0.05
    energy_grid: tuple | None = None
    golden_iters: int = 12
    rate_formula: str = "shannon"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        n_list = tuple(int(n) for n in np.atleast_1d(self.n_list))
        if not n_list or any(n < 1 for n in n_list):
            raise ValueError("n_list must hold positive antenna counts")
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        object.__setattr__(self, "n_list", n_list)
        object.__setattr__(self, "target_mui", tuple(float(t) for t in np.atleast_1d(self.target_mui)))
        if self.m < 1 or self.n_channels < 1 or self.n_symbol_draws < 1:
            raise ValueError("m, n_channels and n_symbol_draws must be >= 1")
        if isinstance(self.solver, dict):
            object.__setattr__(self, "solver", SolverConfig(**self.solver))
        if self.energy_grid is not None:
            object.__setattr__(self, "energy_grid", tuple(float(e) for e in self.energy_grid))
        parse_alphabet(self.alphabet)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["solver"] = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                       for k, v in dataclasses.asdict(self.solver).items()}
        return d


@dataclass
class ExperimentRow:
    """One output row; ``values`` holds the variant-specific columns."""

    variant: str
    m: int
    n: int
    seed: int
    wall_time_s: float
    values: dict
    n_updates: int = 0
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {"variant": self.variant, "m": self.m, "n": self.n}
        rec.update(self.values)
        rec["seed"] = self.seed
        rec["wall_time_s"] = self.wall_time_s
        return rec


def _channels(cfg: ExperimentConfig, n: int, count: int | None = None):
    count = cfg.n_channels if count is None else count
    return [sample_rayleigh(cfg.m, n, cfg.base_seed, CHANNEL_STREAM, n, c) for c in range(count)]


def _symbol_seed(cfg: ExperimentConfig, n: int):
    return (cfg.base_seed, SYMBOL_STREAM, n)


def _mean(a) -> float:
    a = np.ravel(a)
    return math.fsum(a) / a.size


def run_mui_vs_n(cfg: ExperimentConfig, n_jobs=None) -> list[ExperimentRow]:
    """Ergodic per-user interference energy for each antenna count."""
    source = parse_alphabet(cfg.alphabet)
    rows = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        table, updates = mui_table(_channels(cfg, n), source, cfg.energies, cfg.solver,
                                   cfg.n_symbol_draws, _symbol_seed(cfg, n), n_jobs,
                                   return_updates=True)
        per_channel = table.mean(axis=1)
        stderr = float(np.std(per_channel, ddof=1) / math.sqrt(per_channel.size)) if per_channel.size > 1 else 0.0
        per_user = np.array([_mean(col) for col in table.T])
        user_se = (np.std(table, axis=0, ddof=1) / math.sqrt(table.shape[0])
                   if table.shape[0] > 1 else np.zeros(cfg.m))
        wall = time.perf_counter() - t0
        log.info("mui-vs-n N=%d: %d solver updates in %.2fs", n, updates, wall)
        rows.append(ExperimentRow(
            "mui-vs-n", cfg.m, n, cfg.base_seed, wall,
            {"alphabet": cfg.alphabet, "ek": cfg.energies, "n_channels": cfg.n_channels,
             "n_symbol_draws": cfg.n_symbol_draws, "mui_mean": _mean(table), "mui_stderr": stderr},
            n_updates=updates,
            extra={"per_user": per_user, "per_user_stderr": user_se},
        ))
    return rows


def _estar(cfg, n, target, source, n_jobs):
    """Bisection in log-energy for ergodic interference equal to ``target``."""
    chans = _channels(cfg, n)
    seed = _symbol_seed(cfg, n)
    cache: dict[float, float] = {}
    counter = [0]

    def mui(p):
        if p not in cache:
            table, upd = mui_table(chans, source, p, cfg.solver, cfg.n_symbol_draws, seed, n_jobs,
                                   return_updates=True)
            cache[p] = _mean(table)
            counter[0] += upd
        return cache[p]

    scale = n / cfg.m
    lo, hi = cfg.estar_bracket[0] * scale, cfg.estar_bracket[1] * scale
    for _ in range(40):
        if mui(lo) <= target:
            break
        lo /= 2.0
    else:
        raise ExperimentError(f"N={n}: interference {mui(lo):.4g} still above {target} at p={lo:.4g}")
    for _ in range(40):
        if mui(hi) >= target:
            break
        hi *= 2.0
    else:
        raise ExperimentError(f"N={n}: interference {mui(hi):.4g} below {target} even at p={hi:.4g}")
    if not mui(lo) <= target <= mui(hi):
        raise ExperimentError(f"N={n}: interference not monotone on [{lo:.4g}, {hi:.4g}]")
    for _ in range(200):
        p = math.sqrt(lo * hi)
        val = mui(p)
        if abs(val / target - 1.0) <= cfg.estar_rel_tol:
            return p, val, counter[0]
        if val < target:
            lo = p
        else:
            hi = p
    raise ExperimentError(f"N={n}: energy bisection did not reach {cfg.estar_rel_tol:.0%} of {target}")


def run_estar_vs_n(cfg: ExperimentConfig, n_jobs=None) -> list[ExperimentRow]:
    """Largest common symbol energy keeping the ergodic interference at each target."""
    source = parse_alphabet(cfg.alphabet)
    rows = []
    for target in cfg.target_mui:
        if target <= 0:
            raise ValueError("target_mui entries must be positive")
        for n in cfg.n_list:
            t0 = time.perf_counter()
            e_star, achieved, updates = _estar(cfg, n, target, source, n_jobs)
            wall = time.perf_counter() - t0
            log.info("estar-vs-n N=%d I=%g: E*=%.4g, %d solver updates", n, target, e_star, updates)
            rows.append(ExperimentRow(
                "estar-vs-n", cfg.m, n, cfg.base_seed, wall,
                {"alphabet": cfg.alphabet, "target_i": target, "e_star": e_star, "achieved_i": achieved},
                n_updates=updates,
            ))
    return rows


def run_power_vs_n(cfg: ExperimentConfig, n_jobs=None) -> list[ExperimentRow]:
    """Power needed for the per-user rate target, CE scheme versus cooperative bound."""
    rows = []
    target = cfg.target_rate_bpcu
    for n in cfg.n_list:
        t0 = time.perf_counter()
        chans = _channels(cfg, n)
        model = CeRateModel(chans, cfg.solver, cfg.n_symbol_draws, _symbol_seed(cfg, n),
                            cfg.energy_grid, cfg.golden_iters, cfg.rate_formula, n_jobs)
        ce, e_opt = model.required_power(target, cfg.power_bracket_db, cfg.power_tol_db)

        def coop_rate(db):
            budget = LinkBudget.from_db(db)
            return math.fsum(coop_upper_bound(h, budget) for h in chans) / (len(chans) * cfg.m)

        coop = required_power_for_rate(target, coop_rate, cfg.power_bracket_db, cfg.power_tol_db)
        wall = time.perf_counter() - t0
        log.info("power-vs-n N=%d: CE %.2f dB, coop %.2f dB, %d solver updates",
                 n, ce.db, coop.db, model.solver_updates)
        rows.append(ExperimentRow(
            "power-vs-n", cfg.m, n, cfg.base_seed, wall,
            {"target_rate_bpcu": target, "pt_db_ce": ce.db, "pt_db_coop": coop.db,
             "gap_db": ce.db - coop.db},
            n_updates=model.solver_updates,
            extra={"e_opt": e_opt, "ce_at_floor": ce.at_floor, "coop_at_floor": coop.at_floor},
        ))
    return rows


def run_clt_check(cfg: ExperimentConfig, n_jobs=None) -> list[ExperimentRow]:
    """Gaussianity and box-hit statistics on one channel per antenna count."""
    source = parse_alphabet(cfg.alphabet)
    if not isinstance(source, Alphabet):
        raise ValueError("clt-check needs a finite alphabet")
    targets = symbol_targets(source, cfg.m, cfg.energies, cfg.max_targets, cfg.base_seed)
    rows = []
    for n in cfg.n_list:
        t0 = time.perf_counter()
        h = _channels(cfg, n, 1)[0].entries
        seed = (cfg.base_seed, PHASE_STREAM, n)
        report = gaussianity_report(sample_z(h, cfg.n_phase_samples, seed), diagnostics(h))
        hits, worst = box_hit_counts(h, targets, cfg.delta, cfg.n_phase_samples, seed)
        wall = time.perf_counter() - t0
        rows.append(ExperimentRow(
            "clt-check", cfg.m, n, cfg.base_seed, wall,
            {"delta": cfg.delta, "ks_max": report.ks_max,
             "var_ratio_max_dev": report.var_ratio_max_dev,
             "corr_max": report.max_abs_correlation,
             "box_hit_fraction": float(np.mean(hits > 0))},
            extra={"hits": hits, "max_hit_residual": float(worst.max()), "n_targets": len(targets)},
        ))
    return rows


_RUNNERS = {
    "mui-vs-n": run_mui_vs_n,
    "estar-vs-n": run_estar_vs_n,
    "power-vs-n": run_power_vs_n,
    "clt-check": run_clt_check,
}


def run_experiment(cfg: ExperimentConfig, n_jobs=None) -> list[ExperimentRow]:
    return _RUNNERS[cfg.variant](cfg, n_jobs)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r} in experiment output")
        return repr(float(v))
    return str(v)


def format_csv(rows: list[ExperimentRow], timings: bool = False) -> str:
    """Render rows with the variant's exact header.

    Without ``timings`` the ``wall_time_s`` column is left empty so that
    output depends only on the configuration.
    """
    if not rows:
        raise ValueError("no rows to format")
    header = CSV_HEADERS[rows[0].variant]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        rec = row.as_record()
        if not timings:
            rec["wall_time_s"] = ""
        writer.writerow([_fmt(rec[col]) for col in header])
    return buf.getvalue()


def write_csv(rows: list[ExperimentRow], path, timings: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows, timings))

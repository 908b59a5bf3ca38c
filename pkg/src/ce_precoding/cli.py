"""Command-line front end.

Exit codes: 0 on success, 1 for runtime or numerical failures, 2 for usage
and configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .channel import load_channel, sample_rayleigh
from .core import ChannelMatrix
from .experiments import CSV_FILENAMES, VARIANTS, ExperimentConfig, run_experiment, write_csv
from .metrics import BracketError
from .plots import emit_plots
from .precoder import SolverConfig, solve

log = logging.getLogger("ce_precoding")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """Bad configuration file, key or value."""


_INT, _FLOAT, _STR, _INTS, _FLOATS, _FLOAT_PAIR = "int", "float", "str", "ints", "floats", "pair"
_FIELD_TYPES = {
    "variant": _STR,
    "m": _INT,
    "n_list": _INTS,
    "alphabet": _STR,
    "energies": _FLOAT,
    "target_mui": _FLOATS,
    "target_rate_bpcu": _FLOAT,
    "n_channels": _INT,
    "n_symbol_draws": _INT,
    "base_seed": _INT,
    "delta": _FLOAT,
    "n_phase_samples": _INT,
    "max_targets": _INT,
    "estar_bracket": _FLOAT_PAIR,
    "estar_rel_tol": _FLOAT,
    "power_bracket_db": _FLOAT_PAIR,
    "power_tol_db": _FLOAT,
    "energy_grid": _FLOATS,
    "golden_iters": _INT,
    "rate_formula": _STR,
}
_SOLVER_TYPES = {"sweeps_l": _INT, "early_stop_rel_tol": _FLOAT, "init": _STR, "seed": _INT}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key, kind, value):
    ok = {
        _INT: _is_int(value),
        _FLOAT: _is_num(value),
        _STR: isinstance(value, str),
        _INTS: (isinstance(value, list) and all(_is_int(v) for v in value)) or _is_int(value),
        _FLOATS: (isinstance(value, list) and all(_is_num(v) for v in value)) or _is_num(value),
        _FLOAT_PAIR: isinstance(value, list) and len(value) == 2 and all(_is_num(v) for v in value),
    }[kind]
    if key == "energy_grid" and value is None:
        return None
    if key == "seed" and value is None:
        return None
    if not ok:
        raise ConfigError(f"config key {key!r}: expected {kind}, got {json.dumps(value)}")
    if kind in (_INTS, _FLOATS):
        return tuple(value) if isinstance(value, list) else (value,)
    if kind == _FLOAT_PAIR:
        return tuple(float(v) for v in value)
    if kind == _FLOAT:
        return float(value)
    return value


def _parse_override(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def parse_config(path, overrides=(), variant: str | None = None) -> ExperimentConfig:
    """Load an :class:`ExperimentConfig` from JSON and apply ``key=value`` overrides.

    ``path`` may be None to start from the defaults. Keys must match
    :class:`ExperimentConfig` field names; solver keys live under ``"solver"``
    or as ``solver.<name>`` overrides.
    """
    doc = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{p}: top level must be a JSON object")
    doc = dict(doc)
    solver = dict(doc.pop("solver", {}) or {})
    if not isinstance(solver, dict):
        raise ConfigError("config key 'solver' must be an object")
    for text in overrides:
        key, value = _parse_override(text)
        if key.startswith("solver."):
            solver[key[len("solver."):]] = value
        else:
            doc[key] = value

    kwargs = {}
    for key, value in doc.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(key, _FIELD_TYPES[key], value)
    skw = {}
    for key, value in solver.items():
        if key not in _SOLVER_TYPES:
            raise ConfigError(f"unknown config key 'solver.{key}'")
        skw[key] = _coerce(f"solver.{key}", _SOLVER_TYPES[key], value) if key != "init" or isinstance(value, str) else value
    if variant is not None:
        if kwargs.get("variant", variant) != variant:
            raise ConfigError(f"config variant {kwargs['variant']!r} does not match subcommand {variant!r}")
        kwargs["variant"] = variant
    try:
        return ExperimentConfig(solver=SolverConfig(**skw), **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse complex list {text!r}") from None


def _matrix(text: str) -> np.ndarray:
    rows = [_complex_list(r) for r in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("channel rows have different lengths")
    return np.array(rows, dtype=complex)


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("CE_PRECODE_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CE_PRECODE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.6g}{z.imag:+.6g}j"


def cmd_precode(args) -> int:
    if args.h is not None:
        h = ChannelMatrix(_matrix(args.h))
    elif args.channel is not None:
        h = load_channel(args.channel)
    else:
        h = sample_rayleigh(args.random[0], args.random[1], args.seed)
    u = np.array(_complex_list(args.symbols))
    try:
        e = np.array([float(v) for v in args.energies.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse energies {args.energies!r}") from None
    if e.size == 1:
        e = np.full(u.size, e[0])
    if u.size != h.m or e.size != h.m:
        raise ConfigError(f"channel has {h.m} users but got {u.size} symbols and {e.size} energies")
    if np.any(e < 0):
        raise ConfigError("energies must be nonnegative")
    cfg = SolverConfig(args.sweeps_l, args.tol, args.init, args.init_seed)
    report = solve(h, np.sqrt(e) * u, cfg)
    if args.json:
        doc = {
            "m": h.m,
            "n": h.n,
            "theta": report.theta.angles.tolist(),
            "residuals": [[z.real, z.imag] for z in report.residuals],
            "objective": report.objective,
            "initial_objective": report.initial_objective,
            "updates_performed": report.updates_performed,
            "passes": report.passes,
        }
        print(json.dumps(doc))
    else:
        print(f"M={h.m} N={h.n} updates={report.updates_performed} passes={report.passes}")
        print(f"objective {report.objective:.6g} (initial {report.initial_objective:.6g})")
        print("theta " + " ".join(f"{t:.6f}" for t in report.theta.angles))
        print("residuals " + " ".join(_fmt_complex(z) for z in report.residuals))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = parse_config(args.config, args.set or (), args.command)
    n_jobs = _threads(args.threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = run_experiment(cfg, n_jobs=n_jobs)
    path = out_dir / CSV_FILENAMES[cfg.variant]
    write_csv(rows, path, timings=args.timings)
    total = sum(r.n_updates for r in rows)
    wall = sum(r.wall_time_s for r in rows)
    log.info("wrote %s (%d rows, %d solver updates, %.2fs)", path, len(rows), total, wall)
    print(path)
    if not args.no_plot:
        for p in emit_plots(path, out_dir):
            print(p)
    return EXIT_OK


def cmd_plot(args) -> int:
    for p in emit_plots(args.csv, args.out_dir):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ce-precode", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="parallel workers (default: $CE_PRECODE_THREADS or CPU count)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precode", help="precode one symbol vector")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--h", help="channel literal, rows separated by ';', e.g. '1,1;1,-1j'")
    src.add_argument("--channel", help="channel file written by save_channel")
    src.add_argument("--random", nargs=2, type=int, metavar=("M", "N"), help="i.i.d. Rayleigh channel")
    p.add_argument("--seed", type=int, default=0, help="seed for --random")
    p.add_argument("--symbols", required=True, help="comma-separated unit-energy symbols, e.g. '1,0.7+0.7j'")
    p.add_argument("--energies", default="1", help="comma-separated energies or one common value")
    p.add_argument("--sweeps-l", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--init", choices=("zeros", "random"), default="zeros")
    p.add_argument("--init-seed", type=int, default=None)
    p.add_argument("--json", action="store_true", help="print a JSON document")
    p.set_defaults(func=cmd_precode)

    for variant in VARIANTS:
        p = sub.add_parser(variant, help=f"run the {variant} experiment")
        p.add_argument("--config", help="JSON config file (defaults used when omitted)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out-dir", default=".")
        p.add_argument("--timings", action="store_true", help="record wall_time_s in the CSV")
        p.add_argument("--no-plot", action="store_true", help="skip SVG output")
        p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot", help="render SVG charts from an experiment CSV")
    p.add_argument("csv")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BracketError, RuntimeError, ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

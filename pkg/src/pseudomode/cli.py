"""Command-line front end.

Subcommands ``trace``, ``sweep``, ``steady`` and ``detect`` read an optional
YAML key/value config (``--config``), apply flag overrides, and write CSV or
JSON.  Exit status: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, fields, replace
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .experiments import (DEFAULT_ZERO_TOL, Family, InitialStateSpec,
                          asymptotic_concurrence_factorized, default_alpha_grid,
                          detect_death_intervals, run_trace, steady_state, sweep)
from .hilbert import DEFAULT_TOL, InvalidStateError
from .model import DEFAULT_FOCK_CUTOFF, DEFAULT_GAMMA, DEFAULT_OMEGA, Backend, ModelParams
from .propagate import GeneratorError, StepSizeUnderflow, TimeGrid

COMMANDS = ("trace", "sweep", "steady", "detect")
UNITS = "rates in units of gamma0 = 4 Omega^2 / Gamma; times in units of 1/gamma0"


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def as_dict(self) -> dict:
        out = {"error": "config", "message": str(self)}
        if self.key is not None:
            out["key"] = self.key
        if self.line is not None:
            out["line"] = self.line
        return out


@dataclass(frozen=True)
class RunConfig:
    backend: str = Backend.COMMON_STRUCTURED.value
    family: str = Family.ENTANGLED.value
    alpha_sq: float = 0.5
    alpha_points: int = 51
    theta: float = 0.0
    omega: float = DEFAULT_OMEGA
    gamma: float = DEFAULT_GAMMA
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF
    t_max: float = 50.0
    points: int = 1001
    out: str | None = None
    format: str = "csv"
    zero_tol: float = DEFAULT_ZERO_TOL
    threads: int = 1

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.omega, self.gamma, self.fock_cutoff)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(0.0, self.t_max, self.points)

    @property
    def spec(self) -> InitialStateSpec:
        return InitialStateSpec(Family(self.family), self.alpha_sq, self.theta)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CHOICES = {
    "backend": tuple(b.value for b in Backend),
    "family": tuple(f.value for f in Family),
    "format": ("csv", "json"),
}
_INT_FIELDS = {"alpha_points", "fock_cutoff", "points", "threads"}
_FLOAT_FIELDS = {"alpha_sq", "theta", "omega", "gamma", "t_max", "zero_tol"}


def _coerce(key: str, value):
    if key in _CHOICES:
        if value not in _CHOICES[key]:
            raise ConfigError(f"{key} must be one of {', '.join(_CHOICES[key])}; got {value!r}", key)
        return value
    if key in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key} must be an integer; got {value!r}", key)
        return int(value)
    if key in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number; got {value!r}", key)
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite; got {value!r}", key)
        return float(value)
    if key == "out":
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"out must be a path string; got {value!r}", key)
        return value
    raise ConfigError(f"unknown key {key!r}", key)


def validate_config(cfg: RunConfig) -> RunConfig:
    checks = (
        ("alpha_sq", 0.0 <= cfg.alpha_sq <= 1.0, "must lie in [0, 1]"),
        ("alpha_points", cfg.alpha_points >= 2, "must be >= 2"),
        ("omega", cfg.omega > 0, "must be > 0"),
        ("gamma", cfg.gamma > 0, "must be > 0"),
        ("fock_cutoff", cfg.fock_cutoff >= 2, "must be >= 2"),
        ("t_max", cfg.t_max > 0, "must be > 0"),
        ("points", cfg.points >= 2, "must be >= 2"),
        ("zero_tol", cfg.zero_tol >= 0, "must be >= 0"),
        ("threads", cfg.threads >= 1, "must be >= 1"),
    )
    for key, ok, why in checks:
        if not ok:
            raise ConfigError(f"{key} {why}; got {getattr(cfg, key)!r}", key)
    return cfg


def _apply(cfg: RunConfig, values: dict) -> RunConfig:
    unknown = sorted(set(values) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(map(str, unknown))}", str(unknown[0]))
    return replace(cfg, **{k: _coerce(k, v) for k, v in values.items()})


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse a YAML key/value document into a validated :class:`RunConfig`."""
    try:
        doc = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"cannot parse config: {exc}", line=line) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a key/value mapping")
    cfg = _apply(RunConfig(), doc)
    if overrides:
        cfg = _apply(cfg, overrides)
    return validate_config(cfg)


# -- output ----------------------------------------------------------------

def _num(x: float) -> str:
    return format(float(x), ".17g")


def _json_float(x: float):
    return None if not math.isfinite(x) else float(x)


def metadata(cfg: RunConfig, command: str) -> dict:
    meta = {
        "tool": "pseudomode",
        "version": __version__,
        "command": command,
        "backend": cfg.backend,
        "family": cfg.family,
        "params": cfg.params.as_dict(),
        "theta": cfg.theta,
        "time_grid": {"t_start": 0.0, "t_end": cfg.t_max, "n_points": cfg.points},
        "units": UNITS,
        "tolerances": {
            "zero_tol": cfg.zero_tol,
            "hermiticity": DEFAULT_TOL.hermiticity,
            "trace": DEFAULT_TOL.trace,
            "positivity": DEFAULT_TOL.positivity,
        },
    }
    if command == "sweep":
        meta["alpha_grid"] = {"start": 0.0, "stop": 1.0, "n_points": cfg.alpha_points}
    else:
        meta["alpha_sq"] = cfg.alpha_sq
    return meta


def write_csv(columns: dict, meta: dict) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(value)}\n")
    names = list(columns)
    buf.write(",".join(names) + "\n")
    for row in zip(*columns.values()):
        buf.write(",".join(_num(v) for v in row) + "\n")
    return buf.getvalue()


def write_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_trace(cfg: RunConfig) -> None:
    tr = run_trace(cfg.spec, cfg.params, cfg.backend, cfg.grid)
    cols = {"t": tr.times, "C": tr.c, "C1": tr.c1, "C2": tr.c2,
            "pop_minus": tr.pop_minus, "trace_err": tr.trace_err}
    meta = metadata(cfg, "trace")
    if cfg.format == "csv":
        _emit(write_csv(cols, meta), cfg.out)
    else:
        _emit(write_json({"metadata": meta,
                          "columns": {k: [float(x) for x in v] for k, v in cols.items()}}),
              cfg.out)


def cmd_sweep(cfg: RunConfig) -> None:
    alphas = default_alpha_grid(cfg.alpha_points)
    surf = sweep(cfg.family, alphas, cfg.params, cfg.backend, cfg.grid, cfg.theta,
                 threads=cfg.threads)
    meta = metadata(cfg, "sweep")
    doc = {"metadata": meta, "alpha_sq": surf.alpha_sq.tolist(), "t": surf.times.tolist()}
    if cfg.format == "json":
        doc["concurrence"] = surf.concurrence.tolist()
        _emit(write_json(doc), cfg.out)
        return
    n_a, n_t = surf.concurrence.shape
    cols = {"alpha_sq": np.repeat(surf.alpha_sq, n_t),
            "t": np.tile(surf.times, n_a),
            "C": surf.concurrence.reshape(-1)}
    _emit(write_csv(cols, meta), cfg.out)
    if cfg.out is not None:
        doc["data_file"] = Path(cfg.out).name
        _emit(write_json(doc), str(Path(cfg.out).with_suffix(".json")))


def cmd_steady(cfg: RunConfig) -> None:
    rho, conc = steady_state(cfg.spec, cfg.params, cfg.backend)
    doc = {
        "metadata": metadata(cfg, "steady"),
        "basis": ["|00>", "|10>", "|01>", "|11>"],
        "state": {"real": rho.real.tolist(), "imag": rho.imag.tolist()},
        "concurrence": conc,
    }
    if cfg.family == Family.FACTORIZED.value:
        doc["predicted_concurrence"] = asymptotic_concurrence_factorized(cfg.alpha_sq)
    _emit(write_json(doc), cfg.out)


def cmd_detect(cfg: RunConfig) -> None:
    tr = run_trace(cfg.spec, cfg.params, cfg.backend, cfg.grid)
    found = detect_death_intervals(tr, cfg.zero_tol)
    doc = {
        "metadata": metadata(cfg, "detect"),
        "resolution": found.resolution,
        "death_intervals": [{"death": a, "revival": _json_float(b)} for a, b in found],
        "births": found.births(),
        "revivals": found.revivals(),
        "total_death_duration": found.total_duration(),
        "initial_concurrence": float(tr.c[0]),
    }
    _emit(write_json(doc), cfg.out)


_DISPATCH = {"trace": cmd_trace, "sweep": cmd_sweep, "steady": cmd_steady, "detect": cmd_detect}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pseudomode", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pseudomode {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML key/value config file")
    flags = [
        ("--backend", "backend", str), ("--family", "family", str),
        ("--alpha-sq", "alpha_sq", float), ("--theta", "theta", float),
        ("--omega", "omega", float), ("--gamma", "gamma", float),
        ("--fock-cutoff", "fock_cutoff", int), ("--tmax", "t_max", float),
        ("--points", "points", int), ("--alpha-points", "alpha_points", int),
        ("--out", "out", str), ("--format", "format", str),
        ("--zero-tol", "zero_tol", float), ("--threads", "threads", int),
    ]
    for flag, dest, typ in flags:
        p.add_argument(flag, dest=dest, type=typ, default=None)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text = ""
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}", "config") from None
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("command", "config") and v is not None}
        cfg = parse_config(text, overrides)
        try:
            _DISPATCH[args.command](cfg)
        except ValueError as exc:
            if isinstance(exc, (InvalidStateError, GeneratorError)):
                raise
            raise ConfigError(str(exc)) from None
    except ConfigError as exc:
        sys.stderr.write(json.dumps(exc.as_dict()) + "\n")
        return 2
    except (InvalidStateError, GeneratorError, StepSizeUnderflow) as exc:
        sys.stderr.write(json.dumps({"error": "numerical", "type": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line scenario runner.

    python -m eigflow.cli run <scenario> --config <path> --out <dir> --seed <u64> [--levels k]

Exit codes: 0 all checks passed, 1 a check failed, 2 unknown scenario or bad
configuration, 3 a solver did not converge.  ``EIGFLOW_WORKERS`` sets the
worker count of the parallel envelope oracle.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dpp import ConvergenceError

log = logging.getLogger("eigflow")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending ``section.key``."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class DomainSpec:
    kind: str = "ball"
    dim: int = 2
    center: tuple[float, ...] = (0.0, 0.0)
    radius: float = 1.0
    semi_axes: tuple[float, ...] = ()


@dataclass(frozen=True)
class DataSpec:
    affine: tuple[float, ...] = ()
    affine_const: float = 0.0
    halfspace_offset: float = 0.0


@dataclass(frozen=True)
class SolverSpec:
    epsilon: float = 0.1
    h: float = 0.0  # 0 means epsilon / 2
    j: int = 1
    T: float = 1.0
    resolution: int = 36
    sphere_resolution: int = 0  # 0 means resolution
    tol: float = 1e-8
    max_sweeps: int = 200_000


@dataclass(frozen=True)
class GameSpec:
    runs: int = 5000
    diagnostic_runs: int = 10000


@dataclass(frozen=True)
class OutputSpec:
    levels: int = 3


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    data: DataSpec = field(default_factory=DataSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    game: GameSpec = field(default_factory=GameSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self) -> dict:
        return asdict(self)


SECTIONS = {"domain": DomainSpec, "data": DataSpec, "solver": SolverSpec,
            "game": GameSpec, "output": OutputSpec}


def _convert(key: str, raw: str, default):
    try:
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.replace(",", " ").split())
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None


def validate(cfg: RunConfig) -> RunConfig:
    d, s, g, o = cfg.domain, cfg.solver, cfg.game, cfg.output
    if d.kind not in ("ball", "ellipsoid"):
        raise ConfigError("domain.kind", f"unknown domain kind {d.kind!r}")
    if not 1 <= d.dim <= 6:
        raise ConfigError("domain.dim", "dimension must be in 1..6")
    if len(d.center) != d.dim:
        raise ConfigError("domain.center", f"needs {d.dim} coordinates")
    if not d.radius > 0:
        raise ConfigError("domain.radius", "must be positive")
    if d.kind == "ellipsoid" and (len(d.semi_axes) != d.dim or min(d.semi_axes) <= 0):
        raise ConfigError("domain.semi_axes", f"needs {d.dim} positive values")
    if cfg.data.affine and len(cfg.data.affine) != d.dim:
        raise ConfigError("data.affine", f"needs {d.dim} coefficients")
    if not s.epsilon > 0:
        raise ConfigError("solver.epsilon", "must be positive")
    if s.h < 0 or s.h > s.epsilon * (1 + 1e-12):
        raise ConfigError("solver.h", f"need 0 < h <= epsilon={s.epsilon} (0 selects epsilon/2)")
    if not 1 <= s.j <= d.dim:
        raise ConfigError("solver.j", f"need 1 <= j <= N={d.dim}")
    if not s.T > 0:
        raise ConfigError("solver.T", "must be positive")
    if s.resolution < 1:
        raise ConfigError("solver.resolution", "must be >= 1")
    if s.sphere_resolution < 0:
        raise ConfigError("solver.sphere_resolution", "must be >= 0")
    if not s.tol > 0:
        raise ConfigError("solver.tol", "must be positive")
    if s.max_sweeps < 1:
        raise ConfigError("solver.max_sweeps", "must be >= 1")
    if g.runs < 2:
        raise ConfigError("game.runs", "must be >= 2")
    if g.diagnostic_runs < 2:
        raise ConfigError("game.diagnostic_runs", "must be >= 2")
    if o.levels < 1:
        raise ConfigError("output.levels", "must be >= 1")
    return cfg


def parse_config(path, base: RunConfig | None = None) -> RunConfig:
    """Read an INI file over ``base`` (defaults); unknown sections or keys are errors."""
    cfg = base if base is not None else RunConfig()
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    text = Path(path).read_text() if path is not None else ""
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    parts = {name: getattr(cfg, name) for name in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        spec = parts[section]
        known = {f.name: getattr(spec, f.name) for f in fields(spec)}
        updates = {}
        for key, raw in parser.items(section):
            full = f"{section}.{key}"
            if key not in known:
                raise ConfigError(full, "unknown key")
            updates[key] = _convert(full, raw, known[key])
        parts[section] = replace(spec, **updates)
    return validate(RunConfig(**parts))


def overlay(base: RunConfig, **sections) -> RunConfig:
    """``base`` with some fields replaced, e.g. ``overlay(cfg, solver={"j": 2})``."""
    parts = {name: getattr(base, name) for name in SECTIONS}
    for name, updates in sections.items():
        parts[name] = replace(parts[name], **updates)
    return RunConfig(**parts)


# ------------------------------------------------------------------ output

def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_field(path: Path, points: np.ndarray, values: np.ndarray) -> None:
    dim = points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(dim)] + ["value"])
        for p, v in zip(points, values):
            w.writerow([_fmt(c) for c in p] + [_fmt(v)])


def write_decay(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "gap"])
        for t, gap in rows:
            w.writerow([_fmt(t), _fmt(gap)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def run_scenario(name: str, config_path, out_dir, seed: int = 0, levels: int | None = None) -> int:
    """Run one named scenario and write its artifacts; returns the exit code."""
    from .scenarios import SCENARIOS, default_config

    if name not in SCENARIOS:
        log.error("unknown scenario %r (known: %s)", name, ", ".join(sorted(SCENARIOS)))
        return 2
    try:
        cfg = parse_config(config_path, default_config(name))
        if levels is not None:
            cfg = validate(overlay(cfg, output={"levels": int(levels)}))
    except (ConfigError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    from .game import RNG_NAME

    write_json(out / "meta.json", {"scenario": name, "config": cfg.to_dict(), "seed": int(seed),
                                   "version": __version__, "rng": RNG_NAME})
    try:
        result = SCENARIOS[name](cfg, int(seed))
    except ConvergenceError as exc:
        log.error("solver did not converge: %s", exc)
        write_json(out / "report.json", {"scenario": name, "passed": False,
                                         "error": str(exc), "checks": []})
        return 3
    for level, pts, vals in result.fields:
        write_field(out / f"field_t{level}.csv", pts, vals)
    write_decay(out / "decay.csv", result.decay)
    passed = all(c["passed"] for c in result.checks)
    write_json(out / "report.json", {"scenario": name, "passed": passed, "checks": result.checks})
    for c in result.checks:
        log.info("%s %s", "PASS" if c["passed"] else "FAIL", c["name"])
    return 0 if passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eigflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a named scenario")
    run.add_argument("scenario")
    run.add_argument("--config", default=None, help="INI file (omit for defaults)")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--levels", type=int, default=None, help="number of exported field levels")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if args.seed < 0 or args.seed >= 2 ** 64:
        log.error("seed must be an unsigned 64-bit integer")
        return 2
    return run_scenario(args.scenario, args.config, args.out, args.seed, args.levels)


if __name__ == "__main__":
    sys.exit(main())

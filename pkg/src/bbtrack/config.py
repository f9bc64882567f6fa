"""Run configuration read from TOML files with unit-named keys.

Example::

    seed = 0

    [grid]
    nx_cells = 32
    ny_cells = 32
    T_final_time = 1.0
    nt_steps = 32

    [flow]
    nu_viscosity = 0.1

    [objective]
    instance = "recoverable"      # or "overshoot" or "files"
    amplitude_bound = 1.0
    eps_tikhonov = 0.0

    [optimizer]
    method = "ConditionalGradient"
    max_iters = 100

    [sweep]
    workers = 1
    size_min = 1e-3
    size_max = 1e-1
    count = 12

    [output]
    directory = "out"
"""

import glob
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import tomli

from .errors import ConfigError
from .fieldio import read_field
from .grid import Grid, StaggeredField, Trajectory
from .ns import NsConfig
from .optimizer import OptimizerConfig
from .stability import PerturbationSpec, mixed_specs

INSTANCES = ("recoverable", "overshoot", "files")
_SECTIONS = {
    "": {"seed", "grid", "flow", "objective", "optimizer", "sweep", "probe", "output"},
    "grid": {"nx_cells", "ny_cells", "T_final_time", "nt_steps"},
    "flow": {"nu_viscosity", "picard_tol", "picard_max_iters", "initial_state_file"},
    "objective": {"instance", "amplitude_bound", "eps_tikhonov", "beta_overshoot", "target_dir",
                  "self_consistent"},
    "optimizer": {"method", "max_iters", "sigma_tol", "step_rule", "pairwise", "start"},
    "sweep": {"workers", "size_min", "size_max", "count", "xi_mode", "eta_mode", "spec"},
    "probe": {"distances", "samples", "thetas"},
    "output": {"directory"},
}


@dataclass
class RunConfig:
    path: str
    raw: dict
    config_hash: str
    seed: int
    ns: NsConfig
    instance: str
    amplitude: float
    eps: float
    beta: float
    self_consistent: bool
    target_dir: Optional[str]
    initial_state_file: Optional[str]
    optimizer: OptimizerConfig
    start: str
    specs: list = field(default_factory=list)
    workers: int = 1
    distances: list = field(default_factory=list)
    samples: int = 8
    thetas: tuple = (0.25, 0.5, 1.0)
    out_dir: str = "out"

    @property
    def grid(self):
        return self.ns.grid


def config_hash(raw):
    text = json.dumps(raw, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _get(tbl, key, where, kind, default=None, required=False):
    if key not in tbl:
        if required:
            raise ConfigError(f"{where}.{key}: missing required key")
        return default
    val = tbl[key]
    try:
        if kind is int:
            if isinstance(val, bool) or not float(val).is_integer():
                raise ValueError
            return int(val)
        if kind is float:
            if isinstance(val, bool):
                raise ValueError
            return float(val)
        if kind is bool:
            if not isinstance(val, bool):
                raise ValueError
            return val
        if kind is str:
            if not isinstance(val, str):
                raise ValueError
            return val
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {val!r}") from None
    return val


def _check_keys(raw):
    for sec, allowed in _SECTIONS.items():
        tbl = raw if sec == "" else raw.get(sec, {})
        if not isinstance(tbl, dict):
            raise ConfigError(f"{sec}: expected a table")
        for key in tbl:
            if key not in allowed:
                raise ConfigError(f"{sec + '.' if sec else ''}{key}: unknown key")


def _resolve(base, p):
    return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))


def _specs(sw, seed):
    specs = []
    if "spec" in sw:
        entries = sw["spec"]
        if not isinstance(entries, list):
            raise ConfigError("sweep.spec: expected an array of tables")
        for i, e in enumerate(entries):
            where = f"sweep.spec[{i}]"
            try:
                specs.append(PerturbationSpec(
                    xi_magnitude=_get(e, "xi_magnitude", where, float, 0.0),
                    eta_magnitude=_get(e, "eta_magnitude", where, float, 0.0),
                    eps=_get(e, "eps", where, float, 0.0),
                    shape_seed=_get(e, "shape_seed", where, int, seed),
                    xi_mode=_get(e, "xi_mode", where, str, "SmoothRandom"),
                    eta_mode=_get(e, "eta_mode", where, str, "SmoothRandom"),
                    spec_id=_get(e, "spec_id", where, str, f"spec{i:03d}")))
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{where}: {exc}") from None
    elif "count" in sw:
        lo = _get(sw, "size_min", "sweep", float, required=True)
        hi = _get(sw, "size_max", "sweep", float, required=True)
        count = _get(sw, "count", "sweep", int)
        if not 0 < lo < hi:
            raise ConfigError("sweep.size_min: need 0 < size_min < size_max")
        try:
            specs = mixed_specs(np.logspace(np.log10(lo), np.log10(hi), count), seed,
                                _get(sw, "xi_mode", "sweep", str, "SmoothRandom"),
                                _get(sw, "eta_mode", "sweep", str, "SmoothRandom"))
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from None
    return specs


def parse_config(raw, path="<memory>"):
    """Validate a parsed TOML document; every check runs before any solve."""
    _check_keys(raw)
    base = os.path.dirname(os.path.abspath(path)) if path != "<memory>" else os.getcwd()
    seed = _get(raw, "seed", "", int, 0)
    g = raw.get("grid", {})
    try:
        grid = Grid(_get(g, "nx_cells", "grid", int, required=True), _get(g, "ny_cells", "grid", int, required=True),
                    _get(g, "T_final_time", "grid", float, 1.0), _get(g, "nt_steps", "grid", int, required=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"grid: {exc}") from None
    fl = raw.get("flow", {})
    try:
        ns = NsConfig(grid, _get(fl, "nu_viscosity", "flow", float, 0.1), _get(fl, "picard_tol", "flow", float, 1e-9),
                      _get(fl, "picard_max_iters", "flow", int, 50))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"flow: {exc}") from None
    init = _get(fl, "initial_state_file", "flow", str)
    if init is not None:
        init = _resolve(base, init)
        if not os.path.isfile(init):
            raise ConfigError(f"file not found: {init}")
    ob = raw.get("objective", {})
    instance = _get(ob, "instance", "objective", str, "recoverable")
    if instance not in INSTANCES:
        raise ConfigError(f"objective.instance: expected one of {INSTANCES}, got {instance!r}")
    amp = _get(ob, "amplitude_bound", "objective", float, 1.0)
    if not amp > 0:
        raise ConfigError("objective.amplitude_bound: must be positive")
    eps = _get(ob, "eps_tikhonov", "objective", float, 0.0)
    if eps < 0:
        raise ConfigError("objective.eps_tikhonov: must be nonnegative")
    beta = _get(ob, "beta_overshoot", "objective", float, 20.0)
    if not beta > 0:
        raise ConfigError("objective.beta_overshoot: must be positive")
    target = _get(ob, "target_dir", "objective", str)
    if instance == "files":
        if target is None:
            raise ConfigError("objective.target_dir: required for instance 'files'")
        target = _resolve(base, target)
        if not os.path.isdir(target):
            raise ConfigError(f"file not found: {target}")
        for n in range(grid.nt + 1):
            f = os.path.join(target, "y_%06d.fld" % n)
            if not os.path.isfile(f):
                raise ConfigError(f"file not found: {f}")
    op = raw.get("optimizer", {})
    try:
        opt = OptimizerConfig(
            method=_get(op, "method", "optimizer", str, "ConditionalGradient"),
            max_iters=_get(op, "max_iters", "optimizer", int, 100),
            sigma_tol=_get(op, "sigma_tol", "optimizer", float),
            step_rule=_get(op, "step_rule", "optimizer", str, "ExactLineSearchQuadModel"),
            seed=seed, pairwise=_get(op, "pairwise", "optimizer", bool, False))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"optimizer: {exc}") from None
    start = _get(op, "start", "optimizer", str, "midpoint")
    if start not in ("midpoint", "lower", "upper"):
        raise ConfigError(f"optimizer.start: expected midpoint, lower or upper, got {start!r}")
    sw = raw.get("sweep", {})
    workers = _get(sw, "workers", "sweep", int, 1)
    if workers < 1:
        raise ConfigError("sweep.workers: must be at least 1")
    specs = _specs(sw, seed)
    ids = [s.spec_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError("sweep.spec: spec ids must be unique")
    pr = raw.get("probe", {})
    distances = [float(d) for d in pr.get("distances", [0.4, 0.2, 0.1, 0.05, 0.02])]
    if any(d <= 0 for d in distances):
        raise ConfigError("probe.distances: must be positive")
    samples = _get(pr, "samples", "probe", int, 8)
    thetas = tuple(float(t) for t in pr.get("thetas", (0.25, 0.5, 1.0)))
    out = _resolve(base, _get(raw.get("output", {}), "directory", "output", str, "out"))
    return RunConfig(path=path, raw=raw, config_hash=config_hash(raw), seed=seed, ns=ns, instance=instance,
                     amplitude=amp, eps=eps, beta=beta,
                     self_consistent=_get(ob, "self_consistent", "objective", bool, True),
                     target_dir=target, initial_state_file=init, optimizer=opt, start=start, specs=specs,
                     workers=workers, distances=distances, samples=samples, thetas=thetas, out_dir=out)


def load_config(path):
    if not os.path.isfile(path):
        raise ConfigError(f"file not found: {path}")
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, path)


def load_trajectory(directory, grid):
    """Read y_000000.fld .. y_<nt>.fld written by a checkpointed forward solve."""
    files = sorted(glob.glob(os.path.join(directory, "y_*.fld")))
    if len(files) < grid.nt + 1:
        raise ConfigError(f"{directory}: expected {grid.nt + 1} snapshots, found {len(files)}")
    snaps = [read_field(os.path.join(directory, "y_%06d.fld" % n), grid) for n in range(grid.nt + 1)]
    return Trajectory.from_snapshots(snaps)


def initial_state(cfg):
    if cfg.initial_state_file is None:
        return StaggeredField.zeros(cfg.grid)
    return read_field(cfg.initial_state_file, cfg.grid)

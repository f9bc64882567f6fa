"""Backward-Euler / projection solver for the controlled Navier-Stokes system.

One step advances y^n to y^{n+1} through the fixed point

    y^{n+1} = G (y^n / dt + f^n - C(y^{n+1}) y^{n+1}),    G = P H^{-1} P,

with H = I/dt - nu L and C the skew-symmetric convection.  The convective
term is lagged inside a Picard loop.  G is symmetric, so the Stokes part
of the discrete adjoint is the same solver run backwards in time.
"""

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CflWarning, NonlinearDivergence
from .fieldio import write_field
from .forcing import as_force
from .grid import Grid, StaggeredField, Trajectory
from .mac import ops_for


@dataclass(frozen=True)
class NsConfig:
    grid: Grid
    nu: float = 0.1
    picard_tol: float = 1e-9
    picard_max: int = 50

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if not 0 < self.picard_tol < 1:
            raise ValueError(f"picard_tol must lie in (0, 1), got {self.picard_tol}")
        if self.picard_max < 1:
            raise ValueError("picard_max must be at least 1")


class StepOperator:
    """Applies G = P (I/dt - nu L)^{-1} P on packed vectors."""

    def __init__(self, cfg):
        self.op = ops_for(cfg.grid)
        self.dt = cfg.grid.dt
        self.nu = cfg.nu

    def __call__(self, r):
        op = self.op
        return op.P(op.helmholtz_solve(op.P(r), 1.0 / self.dt, self.nu))


def _l2(v):
    return float(np.sqrt(np.vdot(v, v)))


def solve_ns(cfg, u, y0, xi=None, checkpoint_dir=None):
    """Discrete force-to-velocity map S(u, y0) (or S_xi with initial datum y0 + xi).

    ``u`` may be a Control, a (nt, 2, nx, ny) array of cell values, a
    ForceSeries of face forces, or None.  The returned trajectory carries
    per-step diagnostics in ``info["steps"]``.
    """
    g = cfg.grid
    op = ops_for(g)
    G = StepOperator(cfg)
    f = as_force(g, u).data
    raw0 = y0.to_vec() if y0 is not None else np.zeros(g.n_dof)
    if xi is not None:
        raw0 = raw0 + xi.to_vec()
    y = op.P(raw0)
    info = {
        "initial_projection_correction": float(np.sqrt(g.cell_area) * _l2(raw0 - y)),
        "steps": [],
        "cfl_max": 0.0,
        "cfl_warning": False,
    }
    out = np.empty((g.nt + 1, g.n_dof))
    out[0] = y
    hmin = min(g.hx, g.hy)
    dt = g.dt
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
        write_field(os.path.join(checkpoint_dir, "y_%06d.fld" % 0), StaggeredField.from_vec(g, y))
        log = open(os.path.join(checkpoint_dir, "run.json-lines"), "w")
    else:
        log = None
    try:
        for n in range(g.nt):
            base = G(y / dt + f[n])
            # linear extrapolation as the Picard starting guess
            y_new = 2.0 * y - out[n - 1] if n > 0 else y
            for it in range(1, cfg.picard_max + 1):
                cand = base - G(op.conv(y_new, y_new))
                diff = _l2(cand - y_new)
                scale = _l2(cand)
                y_new = cand
                if diff <= cfg.picard_tol * scale:
                    break
            else:
                raise NonlinearDivergence(
                    f"Picard iteration stalled at step {n + 1} (relative increment {diff / max(scale, 1e-300):.3e})",
                    step=n + 1, residual=diff / max(scale, 1e-300))
            y = y_new
            out[n + 1] = y
            cfl = float(np.abs(y).max()) * dt / hmin if y.size else 0.0
            info["cfl_max"] = max(info["cfl_max"], cfl)
            if cfl > 1.0 and not info["cfl_warning"]:
                info["cfl_warning"] = True
                warnings.warn(f"CFL number {cfl:.2f} > 1 at step {n + 1}", CflWarning, stacklevel=2)
            rec = {
                "step": n + 1,
                "time": (n + 1) * dt,
                "picard_iters": it,
                "div_max": float(np.abs(op.div(y)).max()),
                "energy": 0.5 * g.cell_area * float(np.vdot(y, y)),
            }
            info["steps"].append(rec)
            if log is not None:
                log.write(json.dumps(rec) + "\n")
                write_field(os.path.join(checkpoint_dir, "y_%06d.fld" % (n + 1)),
                            StaggeredField.from_vec(g, y))
    finally:
        if log is not None:
            log.close()
    return Trajectory(g, out, info)


def solve_ns_perturbed(cfg, u, y0, xi, checkpoint_dir=None):
    """S_xi(u): the same solver started from y0 + xi."""
    return solve_ns(cfg, u, y0, xi=xi, checkpoint_dir=checkpoint_dir)

"""Conditional gradient (eps = 0) and projected gradient (eps > 0) solvers."""

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .control import (Control, bang_bang_from_gradient, eval_J, fw_gap, gradient, hessian_quadratic,
                      normal_cone_gap, q_inner)
from .errors import LineSearchFailure

log = logging.getLogger(__name__)

METHODS = ("ConditionalGradient", "ProjectedGradient")
STEP_RULES = ("ExactLineSearchQuadModel", "Armijo")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "ConditionalGradient"
    max_iters: int = 100
    sigma_tol: Optional[float] = None
    step_rule: str = "ExactLineSearchQuadModel"
    c1: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12
    seed: int = 0
    pairwise: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.sigma_tol is not None and not self.sigma_tol > 0:
            raise ValueError("sigma_tol must be positive")


@dataclass
class SolveReport:
    u_star: Control
    J_star: float
    sigma_final: float
    rho_inf: float
    iterations: int
    singular_measure: float
    sigma_tol: float
    cap_hit: bool
    history: list = field(default_factory=list)
    gradient_singular_measure: float = 0.0
    fixed_point_residual: Optional[float] = None
    lmo_tie_fraction: float = 0.0
    wall_seconds: float = 0.0

    def summary(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("u_star", "history")}
        d["history_length"] = len(self.history)
        return d

    def to_json(self, **extra):
        d = self.summary()
        d["history"] = self.history
        d.update(extra)
        return json.dumps(d, indent=2)

    def history_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iter", "J", "sigma", "step", "singular_measure"])
        for h in self.history:
            w.writerow([h["iter"], repr(h["J"]), repr(h["sigma"]), repr(h["step"]), repr(h["singular_measure"])])
        return buf.getvalue()


def interior_fraction(u, bounds):
    """Fraction of Q x {1,2} where u lies strictly inside the box (bang-bang proxy)."""
    inside = (u > bounds.ua) & (u < bounds.ub)
    return float(inside.mean())


def lmo(g, bounds):
    """Vertex of the box minimizing <g, .>: ua where g > 0, ub where g < 0, midpoint on ties.

    Returns (vertex values, fraction of tied entries).
    """
    ua, ub = bounds.ua, bounds.ub
    out = np.where(g > 0, ua, np.where(g < 0, ub, 0.5 * (ua + ub)))
    return out, float(np.mean(g == 0))


class _ActiveSet:
    """Convex decomposition of the iterate into box vertices (pairwise steps).

    Vertices are stored as int8 codes (-1 lower bound, +1 upper bound, 0
    midpoint); the starting point is kept as one extra dense atom.
    """

    def __init__(self, u0, bounds):
        self.bounds = bounds
        self.atoms = {"start": (None, np.array(u0))}
        self.weights = {"start": 1.0}

    def dense(self, key):
        code, arr = self.atoms[key]
        if arr is not None:
            return arr
        b = self.bounds
        return np.where(code > 0, b.ub, np.where(code < 0, b.ua, 0.5 * (b.ua + b.ub)))

    def add_vertex(self, g):
        code = np.sign(-g).astype(np.int8)
        key = code.tobytes()
        if key not in self.atoms:
            self.atoms[key] = (code, None)
            self.weights[key] = 0.0
        return key

    def away(self, g):
        best, best_val = None, -np.inf
        for key, wt in self.weights.items():
            if wt <= 0:
                continue
            val = float(np.vdot(g, self.dense(key)))
            if val > best_val:
                best, best_val = key, val
        return best

    def shift(self, to_key, from_key, t):
        self.weights[to_key] += t
        self.weights[from_key] -= t
        if self.weights[from_key] <= 1e-15:
            del self.weights[from_key]
            del self.atoms[from_key]


def _fixed_point_residual(ctx, u, g, bounds):
    w_cells = g - ctx.eps * u
    p = np.clip(-w_cells / ctx.eps, bounds.ua, bounds.ub)
    grid = ctx.grid
    return float(np.sqrt(q_inner(grid, u - p, u - p)))


def solve(ctx, cfg, u0):
    """Minimize the (perturbed) tracking functional over the control box from u0."""
    t_start = time.perf_counter()
    grid = ctx.grid
    bounds = u0.bounds
    ua, ub = bounds.ua, bounds.ub
    if cfg.method == "ProjectedGradient" and ctx.eps <= 0:
        log.warning("projected gradient without Tikhonov term; spectral steps only")
    u = np.array(u0.values)
    J, y = eval_J(ctx, u)
    g, w = gradient(ctx, u, y=y)
    sigma_tol = cfg.sigma_tol if cfg.sigma_tol is not None else 1e-8 * J + 1e-12
    spectral = 1.0 / ctx.eps if ctx.eps > 0 else None
    ties = 0.0
    history = []
    step = 0.0
    cap_hit = True
    prev = None
    active = _ActiveSet(u, bounds) if cfg.method == "ConditionalGradient" and cfg.pairwise else None
    it = 0
    for it in range(cfg.max_iters + 1):
        sigma = fw_gap(grid, g, u, ua, ub)
        meas = interior_fraction(u, bounds)
        history.append({"iter": it, "J": J, "sigma": sigma, "step": step, "singular_measure": meas})
        log.debug("iter %d J=%.6e sigma=%.3e step=%.3e", it, J, sigma, step)
        if sigma <= sigma_tol:
            cap_hit = False
            break
        if it == cfg.max_iters:
            break
        t_max = 1.0
        if cfg.method == "ConditionalGradient":
            s, tie = lmo(g, bounds)
            ties = max(ties, tie)
            if active is not None:
                s_key = active.add_vertex(g)
                a_key = active.away(g)
                if a_key == s_key:
                    break
                d = s - active.dense(a_key)
                t_max = active.weights[a_key]
            else:
                d = s - u
        else:
            if spectral is None:
                spectral = float(np.sqrt(q_inner(grid, u, u) + 1e-30) / np.sqrt(q_inner(grid, g, g) + 1e-300))
            if prev is not None:
                du, dg = u - prev[0], g - prev[1]
                curv = q_inner(grid, du, dg)
                if curv > 0:
                    spectral = float(np.clip(q_inner(grid, du, du) / curv, 1e-10 * spectral, 1e10 * spectral))
            d = np.clip(u - spectral * g, ua, ub) - u
        slope = q_inner(grid, g, d)
        if not slope < 0:
            log.info("no descent direction at iteration %d (slope %.3e)", it, slope)
            break
        t = 1.0
        if cfg.step_rule == "ExactLineSearchQuadModel":
            curv = hessian_quadratic(ctx, u, d, y=y, w=w)
            if curv > 0:
                t = min(1.0, -slope / curv)
        t = min(t, t_max)
        while True:
            cand = np.clip(u + t * d, ua, ub)
            J_new, y_new = eval_J(ctx, cand)
            if J_new <= J + cfg.c1 * t * slope:
                break
            # decrease below the rounding level of J cannot be measured; accept the step
            if abs(J_new - J) <= 64 * np.finfo(float).eps * max(abs(J), 1e-300):
                break
            t *= cfg.backtrack
            if t < cfg.min_step:
                raise LineSearchFailure(f"no decrease at iteration {it} down to step {t:.3e}")
        prev = (u, g)
        if active is not None:
            if t >= t_max:
                t = t_max
            active.shift(s_key, a_key, t)
        u, J, y, step = cand, J_new, y_new, t
        g, w = gradient(ctx, u, y=y)
    sigma = fw_gap(grid, g, u, ua, ub)
    rho = float(normal_cone_gap(g, u, ua, ub).max())
    _, gmeas = bang_bang_from_gradient(g, u, bounds)
    meas = interior_fraction(u, bounds)
    fpr = _fixed_point_residual(ctx, u, g, bounds) if ctx.eps > 0 else None
    return SolveReport(
        u_star=Control(grid, u, bounds), J_star=J, sigma_final=sigma, rho_inf=rho, iterations=it,
        singular_measure=meas, gradient_singular_measure=gmeas, sigma_tol=sigma_tol, cap_hit=cap_hit, history=history,
        fixed_point_residual=fpr, lmo_tie_fraction=ties, wall_seconds=time.perf_counter() - t_start)


def continuation_path(ctx, eps_list, cfg, u0):
    """Solve for each eps in a strictly decreasing list, warm-starting each solve."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])) or eps_list[-1] < 0:
        raise ValueError("eps_list must be strictly decreasing and nonnegative")
    reports = []
    u = u0
    for eps in eps_list:
        c = ctx.with_perturbation(xi=ctx.xi, eta=ctx.eta, eps=eps)
        method = "ProjectedGradient" if eps > 0 else "ConditionalGradient"
        rep = solve(c, replace(cfg, method=method), u)
        reports.append(rep)
        u = rep.u_star
    return reports

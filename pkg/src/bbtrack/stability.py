"""Perturbation experiments: growth probe, curvature probe, gap diagnostics, rate fit."""

import concurrent.futures as cf
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .control import (ObjectiveContext, eval_J, gradient, hessian_quadratic, normal_cone_gap, q_inner, q_l1,
                      stationarity_from_gradient)
from .errors import DegenerateShape, InsufficientFeasibleSamples
from .fields import leray_project, norm
from .grid import StaggeredField, Trajectory
from .ns import solve_ns
from .oseen import LinearizationPoint, solve_oseen
from .optimizer import OptimizerConfig, solve
from .subreg import BoxProblem

log = logging.getLogger(__name__)

XI_NORM_DISCLOSURE = ("xi is measured in the discrete H1 (no-slip Dirichlet) seminorm of the projected field, "
                      "a surrogate for the solenoidal trace-space norm")

XI_MODES = ("SmoothRandom", "SingleVortex")
ETA_MODES = ("SmoothRandom", "Checker")


@dataclass(frozen=True)
class PerturbationSpec:
    xi_magnitude: float = 0.0
    eta_magnitude: float = 0.0
    eps: float = 0.0
    shape_seed: int = 0
    xi_mode: str = "SmoothRandom"
    eta_mode: str = "SmoothRandom"
    spec_id: str = ""

    def __post_init__(self):
        if min(self.xi_magnitude, self.eta_magnitude, self.eps) < 0:
            raise ValueError("perturbation magnitudes must be nonnegative")
        if self.xi_mode not in XI_MODES:
            raise ValueError(f"unknown xi mode {self.xi_mode!r}")
        if self.eta_mode not in ETA_MODES:
            raise ValueError(f"unknown eta mode {self.eta_mode!r}")

    @property
    def total_size(self):
        return total_size(self.xi_magnitude, self.eta_magnitude, self.eps)


def total_size(xi_norm, eta_norm, eps):
    """Unweighted ||xi|| + ||eta|| + eps."""
    return float(xi_norm) + float(eta_norm) + float(eps)


# ---- perturbation shapes ------------------------------------------------------

def _field_from_streamfunction(grid, psi):
    """Discrete curl of a corner streamfunction; exactly divergence free."""
    u = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    v = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    u[0] = u[-1] = 0.0
    v[:, 0] = v[:, -1] = 0.0
    return StaggeredField(grid, u, v)


def _xi_shape(grid, mode, rng):
    X, Y = grid.corner_coords()
    if mode == "SmoothRandom":
        psi = np.zeros_like(X)
        for k in range(1, 5):
            for l in range(1, 5):
                psi += rng.standard_normal() / (k * k + l * l) * np.sin(k * np.pi * X) * np.sin(l * np.pi * Y)
    else:
        x0, y0 = rng.uniform(0.3, 0.7, size=2)
        width = rng.uniform(0.08, 0.15)
        psi = np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2 * width**2)) * np.sin(np.pi * X) * np.sin(np.pi * Y)
    f = _field_from_streamfunction(grid, psi)
    return leray_project(f)[0]


def _eta_shape(grid, mode, rng):
    xu, yu = grid.u_face_coords()
    xv, yv = grid.v_face_coords()
    t = grid.times() / grid.T
    if mode == "SmoothRandom":
        def smooth(x, y, coef):
            out = np.zeros_like(x)
            for (k, l), c in np.ndenumerate(coef):
                out += c * np.cos(k * np.pi * x) * np.cos(l * np.pi * y) / (1 + k + l)
            return out
        layers = []
        for p in range(3):
            cu = rng.standard_normal((3, 3))
            cv = rng.standard_normal((3, 3))
            fu, fv = smooth(xu, yu, cu), smooth(xv, yv, cv)
            fu[0] = fu[-1] = 0.0
            fv[:, 0] = fv[:, -1] = 0.0
            layers.append(StaggeredField(grid, fu, fv).to_vec())
        data = sum(np.cos(p * np.pi * t)[:, None] * layers[p][None, :] for p in range(3))
    else:
        k = int(rng.integers(2, 5))
        su, sv = rng.choice([-1.0, 1.0], size=2)
        fu = su * np.sign(np.sin(k * np.pi * xu) * np.sin(k * np.pi * yu))
        fv = sv * np.sign(np.sin(k * np.pi * xv) * np.sin(k * np.pi * yv))
        fu[0] = fu[-1] = 0.0
        fv[:, 0] = fv[:, -1] = 0.0
        phase = rng.uniform(0, 2 * np.pi)
        data = (1.0 + 0.5 * np.sin(2 * np.pi * t + phase))[:, None] * StaggeredField(grid, fu, fv).to_vec()[None, :]
    return Trajectory(grid, data)


def make_perturbation(grid, spec):
    """Return (xi, eta) scaled to the requested H1-surrogate and L2(Q) magnitudes.

    xi is divergence free; eta respects the cap max|eta| <= 10 * eta_magnitude
    (face values).  Both are deterministic in ``spec.shape_seed``.
    """
    rng = np.random.default_rng(spec.shape_seed)
    xi_shape = _xi_shape(grid, spec.xi_mode, rng)
    eta_shape = _eta_shape(grid, spec.eta_mode, rng)
    if spec.xi_magnitude > 0:
        n = norm(xi_shape, "H1")
        if not n > 1e-14:
            raise DegenerateShape("xi shape has zero norm")
        xi = xi_shape * (spec.xi_magnitude / n)
        xi = xi * (spec.xi_magnitude / norm(xi, "H1"))
    else:
        xi = StaggeredField.zeros(grid)
    if spec.eta_magnitude > 0:
        n = norm(eta_shape, "L2")
        if not n > 1e-14:
            raise DegenerateShape("eta shape has zero norm")
        data = eta_shape.data * (spec.eta_magnitude / n)
        cap = 10.0 * spec.eta_magnitude
        for _ in range(50):
            if np.abs(data).max() <= cap:
                break
            data = np.clip(data, -cap, cap)
            data = data * (spec.eta_magnitude / norm(Trajectory(grid, data), "L2"))
        eta = Trajectory(grid, data)
        eta = eta * (spec.eta_magnitude / norm(eta, "L2"))
    else:
        eta = Trajectory.zeros(grid)
    return xi, eta


def perturbed_context(ctx, spec):
    xi, eta = make_perturbation(ctx.grid, spec)
    return ctx.with_perturbation(xi=xi, eta=eta, eps=spec.eps), xi, eta


# ---- probe hooks --------------------------------------------------------------

class _PdeHook:
    def __init__(self, ctx, u_bar):
        self.ctx = ctx
        self.grid = ctx.grid
        self.u_bar = np.asarray(getattr(u_bar, "values", u_bar), dtype=float)
        self.ua, self.ub = u_bar.bounds.ua, u_bar.bounds.ub
        self.weight = self.grid.dt * self.grid.cell_area
        _, self.y = eval_J(ctx, self.u_bar)
        self.g, self.w = gradient(ctx, self.u_bar, y=self.y)

    def first(self, d):
        return q_inner(self.grid, self.g, d)

    def second(self, d):
        return hessian_quadratic(self.ctx, self.u_bar, d, y=self.y, w=self.w)

    def second_at(self, u, d):
        return hessian_quadratic(self.ctx, u, d)


class _BoxHook:
    weight = 1.0

    def __init__(self, problem, u_bar):
        self.p = problem
        self.u_bar = np.asarray(u_bar, dtype=float)
        self.ua, self.ub = problem.lower, problem.upper
        self.g = problem.grad(self.u_bar)
        self.H = problem.hess(self.u_bar)

    def first(self, d):
        return float(self.g @ d)

    def second(self, d):
        return float(d @ self.H @ d)

    def second_at(self, u, d):
        return float(d @ self.p.hess(u) @ d)


def _hook(ctx, u_bar):
    if isinstance(ctx, BoxProblem):
        return _BoxHook(ctx, u_bar)
    return _PdeHook(ctx, u_bar)


def _orders(hook, n, rng, jitter=0.25):
    """Flip orders by increasing |J'(u_bar)|: the exact order first, then jittered copies."""
    key = np.abs(hook.g).ravel()
    orders = [np.argsort(key, kind="stable")]
    while len(orders) < n:
        orders.append(np.argsort(key * np.exp(jitter * rng.standard_normal(key.size)), kind="stable"))
    return orders[:n]


def _flip_direction(hook, order, dist):
    """u - u_bar for the point that moves entries to their far bound in the given order.

    Entries are moved one after another until the L1 distance equals dist
    (the last one only partially).  Returns None if the box is exhausted first.
    """
    u = hook.u_bar.ravel()
    far = np.where(u - hook.ua.ravel() >= hook.ub.ravel() - u, hook.ua.ravel(), hook.ub.ravel())
    gap = np.abs(far - u)[order] * hook.weight
    csum = np.cumsum(gap)
    if csum.size == 0 or csum[-1] < dist * (1 - 1e-12):
        return None
    k = int(np.searchsorted(csum, dist))
    k = min(k, csum.size - 1)
    d = np.zeros_like(u)
    idx = order[:k]
    d[idx] = (far - u)[idx]
    rest = dist - (csum[k - 1] if k > 0 else 0.0)
    j = order[k]
    if gap[k] > 0:
        d[j] = (far[j] - u[j]) * min(1.0, rest / gap[k])
    return d.reshape(hook.u_bar.shape)


def _loglog_fit(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def growth_exponent_probe(ctx, u_bar, distances, samples_per_distance=8, seed=0):
    """Estimate mu from min over samples of G(u) = J'(u_bar)(u - u_bar) + J''(u_bar)(u - u_bar)^2.

    Each sample is a point at exact L1 distance from u_bar obtained by moving
    entries to the opposite bound, low-|J'(u_bar)| entries first (with random
    jitter).  Works on an ObjectiveContext (u_bar a Control) or on a
    finite-dimensional BoxProblem (u_bar an array).  Returns (mu_hat, table).
    """
    distances = sorted(float(d) for d in distances)
    if len(distances) < 3:
        raise ValueError("the growth fit needs at least 3 distances")
    if min(distances) <= 0:
        raise ValueError("distances must be positive")
    hook = _hook(ctx, u_bar)
    orders = _orders(hook, samples_per_distance, np.random.default_rng(seed))
    table = []
    for dist in distances:
        G = []
        for order in orders:
            d = _flip_direction(hook, order, dist)
            if d is not None:
                G.append(hook.first(d) + hook.second(d))
        if len(G) < samples_per_distance:
            raise InsufficientFeasibleSamples(f"distance {dist:g} leaves the box for some samples")
        G = np.array(G)
        neg = int((G < 0).sum())
        if neg:
            log.warning("growth violated for %d samples at distance %g (min G = %.3e)", neg, dist, G.min())
        table.append({"distance": dist, "min_G": float(G.min()), "max_G": float(G.max()),
                      "n_samples": len(G), "violations": neg})
    usable = [r for r in table if r["min_G"] > 0]
    if len(usable) < 3:
        return float("nan"), table
    slope, _, _ = _loglog_fit([r["distance"] for r in usable], [r["min_G"] for r in usable])
    return slope - 1.0, table


def curvature_probe(ctx, u_bar, distances, samples=2, mu=1.0, thetas=(0.25, 0.5, 1.0), seed=0):
    """Ratios |J''(u_bar + theta d) d^2 - J''(u_bar) d^2| / ||d||_L1^(mu+1) on probe points."""
    hook = _hook(ctx, u_bar)
    orders = _orders(hook, samples, np.random.default_rng(seed))
    table = []
    for dist in sorted(float(x) for x in distances):
        for idx, order in enumerate(orders):
            if dist == 0:
                table.append({"distance": 0.0, "sample": idx, "theta": None, "ratio": None, "degenerate": True})
                continue
            d = _flip_direction(hook, order, dist)
            if d is None:
                continue
            base = hook.second(d)
            for th in thetas:
                delta = hook.second_at(hook.u_bar + th * d, d) - base
                table.append({"distance": dist, "sample": idx, "theta": th,
                              "ratio": abs(delta) / dist ** (mu + 1.0), "degenerate": False})
    return table


# ---- gap diagnostics ----------------------------------------------------------

def gap_diagnostics(ctx, u, spec, u_bar=None, v=None, seed=0):
    """Measured constants of the linearized-state, adjoint and inclusion gaps at u."""
    grid = ctx.grid
    uv = np.asarray(getattr(u, "values", u), dtype=float)
    bounds = u.bounds
    xi, eta = make_perturbation(grid, spec)
    base = ctx.with_perturbation()
    pert = ctx.with_perturbation(xi=xi, eta=eta, eps=0.0)
    y = solve_ns(ctx.cfg, uv, ctx.y0)
    y_xi = solve_ns(ctx.cfg, uv, ctx.y0, xi=xi)
    if v is None:
        v = np.random.default_rng(seed).uniform(-1.0, 1.0, uv.shape)
    z = solve_oseen(LinearizationPoint(ctx.cfg, y), v)
    z_xi = solve_oseen(LinearizationPoint(ctx.cfg, y_xi), v)
    state_gap = norm(y_xi - y, "Linf")
    lin_num = norm(z_xi - z, "L2")
    v_norm = float(np.sqrt(q_inner(grid, v, v)))
    g0, w0 = gradient(base, uv, y=y)
    g1, w1 = gradient(pert, uv, y=y_xi)
    adj_num = norm(w1 - w0, "Linf")
    xi_n, eta_n = norm(xi, "H1"), norm(eta, "L2")
    rho = g0 - spec.eps * uv - g1
    shifted = g0 - rho
    _, incl = stationarity_from_gradient(grid, shifted, uv, bounds)
    rec = {
        "xi_norm": xi_n, "eta_norm": eta_n, "eps": spec.eps,
        "state_gap_C": state_gap,
        "linear_gap_L2": lin_num,
        "linear_gap_ratio": lin_num / (state_gap * v_norm) if state_gap > 0 and v_norm > 0 else None,
        "adjoint_gap": adj_num,
        "adjoint_gap_ratio": adj_num / (xi_n + eta_n) if xi_n + eta_n > 0 else None,
        "rho_inf": float(np.abs(rho).max()),
        "inclusion_residual": incl,
    }
    if u_bar is not None:
        rec["l1_distance"] = q_l1(grid, uv - np.asarray(getattr(u_bar, "values", u_bar)))
    return rec


# ---- rate experiment ----------------------------------------------------------

@dataclass
class RateFit:
    points: list
    slope: float
    intercept: float
    r2: float
    mu_hat: Optional[float] = None
    excluded_ids: list = field(default_factory=list)
    nonmonotone_tail: bool = False

    @property
    def n_points(self):
        return len(self.points)

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "n_points": self.n_points,
                "mu_hat": self.mu_hat, "excluded_ids": list(self.excluded_ids),
                "nonmonotone_tail": self.nonmonotone_tail, "points": [list(p) for p in self.points]}

    def to_json(self, **extra):
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2)

    def envelope(self, size, slack=1.5):
        return slack * np.exp(self.intercept) * np.asarray(size, float) ** self.slope


def fit_rate(points, mu_hat=None, excluded_ids=()):
    """Least-squares fit of log(dist) = slope * log(size) + intercept."""
    pts = sorted((float(s), float(d)) for s, d in points)
    if len(pts) < 3:
        raise ValueError("a rate fit needs at least 3 points")
    if any(s <= 0 or d <= 0 for s, d in pts):
        raise ValueError("sizes and distances must be positive")
    slope, intercept, r2 = _loglog_fit([p[0] for p in pts], [p[1] for p in pts])
    dists = [p[1] for p in pts]
    tail = any(b < a for a, b in zip(dists, dists[1:]))
    return RateFit(pts, slope, intercept, r2, mu_hat, list(excluded_ids), tail)


SWEEP_COLUMNS = ["spec_id", "xi_norm", "eta_norm", "eps", "total_size", "l1_distance", "J_hat", "sigma_final",
                 "singular_measure", "wall_seconds"]


def run_spec(ctx_base, u_bar, spec, opt_cfg):
    """Solve one perturbed problem warm-started at u_bar; returns a sweep record."""
    t0 = time.perf_counter()
    rec = {"spec_id": spec.spec_id}
    try:
        ctx, xi, eta = perturbed_context(ctx_base, spec)
        method = "ProjectedGradient" if spec.eps > 0 else "ConditionalGradient"
        rep = solve(ctx, replace(opt_cfg, method=method), u_bar)
        rec.update({
            "xi_norm": norm(xi, "H1"), "eta_norm": norm(eta, "L2"), "eps": spec.eps,
            "l1_distance": q_l1(ctx.grid, rep.u_star.values - u_bar.values),
            "J_hat": rep.J_star, "sigma_final": rep.sigma_final, "singular_measure": rep.singular_measure,
            "iterations": rep.iterations, "cap_hit": rep.cap_hit, "error": None,
        })
        rec["total_size"] = total_size(rec["xi_norm"], rec["eta_norm"], rec["eps"])
    except Exception as exc:  # solver failures are excluded from the fit, not fatal
        log.warning("spec %s failed: %s", spec.spec_id, exc)
        rec.update({"xi_norm": spec.xi_magnitude, "eta_norm": spec.eta_magnitude, "eps": spec.eps,
                    "total_size": spec.total_size, "l1_distance": None, "J_hat": None, "sigma_final": None,
                    "singular_measure": None, "error": repr(exc)})
    rec["wall_seconds"] = time.perf_counter() - t0
    return rec


def rate_experiment(ctx_base, u_bar, specs, opt_cfg, workers=1, mu_hat=None):
    """Solve every spec, fit the Hoelder rate; returns (RateFit, records keyed by spec id)."""
    specs = [s if s.spec_id else replace(s, spec_id=f"spec{i:03d}") for i, s in enumerate(specs)]
    ids = [s.spec_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError("spec ids must be unique")
    todo = [s for s in specs if s.total_size > 0]
    records = {s.spec_id: {"spec_id": s.spec_id, "total_size": 0.0, "l1_distance": None,
                           "error": "zero size", "wall_seconds": 0.0}
               for s in specs if s.total_size <= 0}
    if workers > 1 and len(todo) > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(run_spec, ctx_base, u_bar, s, opt_cfg): s.spec_id for s in todo}
            for fut in cf.as_completed(futs):
                records[futs[fut]] = fut.result()
    else:
        for s in todo:
            records[s.spec_id] = run_spec(ctx_base, u_bar, s, opt_cfg)
    points, excluded = [], []
    for sid in ids:
        r = records[sid]
        if r.get("error") is None and r["l1_distance"] and r["l1_distance"] > 0 and r["total_size"] > 0:
            points.append((r["total_size"], r["l1_distance"]))
        else:
            excluded.append(sid)
    fit = fit_rate(points, mu_hat, excluded) if len(points) >= 3 else RateFit(
        points, float("nan"), float("nan"), float("nan"), mu_hat, excluded)
    return fit, [records[sid] for sid in ids]


def mixed_specs(sizes, seed=0, xi_mode="SmoothRandom", eta_mode="SmoothRandom"):
    """Specs splitting each total size equally among xi, eta and eps (same shape seed)."""
    return [PerturbationSpec(s / 3.0, s / 3.0, s / 3.0, seed, xi_mode, eta_mode, f"spec{i:03d}")
            for i, s in enumerate(sizes)]

"""Control set, tracking objective and its first and second variations.

Controls are cell-centered, piecewise constant in time on (t_n, t_{n+1}],
stored as arrays of shape (nt, 2, nx, ny).  The control pairing is

    <a, b>_Q = dt * hx * hy * sum(a * b).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridMismatch, InfeasibleControl
from .forcing import faces_to_cells
from .grid import Grid, StaggeredField, Trajectory, _frozen
from .ns import NsConfig, solve_ns
from .oseen import LinearizationPoint, solve_adjoint, solve_oseen
from .mac import ops_for


def control_shape(grid):
    return (grid.nt, 2, grid.nx, grid.ny)


@dataclass(frozen=True, eq=False)
class ControlBounds:
    ua: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        ua, ub = np.broadcast_arrays(np.asarray(self.ua, float), np.asarray(self.ub, float))
        if np.any(ua > ub):
            raise ValueError("lower bound exceeds upper bound somewhere")
        object.__setattr__(self, "ua", _frozen(ua))
        object.__setattr__(self, "ub", _frozen(ub))

    @classmethod
    def box(cls, grid, lo, hi):
        shape = control_shape(grid)
        return cls(np.full(shape, float(lo)), np.full(shape, float(hi)))

    def midpoint(self):
        return 0.5 * (self.ua + self.ub)

    def clip(self, values):
        return np.clip(values, self.ua, self.ub)


@dataclass(frozen=True, eq=False)
class Control:
    grid: Grid
    values: np.ndarray
    bounds: ControlBounds

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != control_shape(self.grid):
            raise GridMismatch(f"control shape {v.shape}, expected {control_shape(self.grid)}")
        if self.bounds.ua.shape != v.shape:
            raise GridMismatch("bounds do not match control shape")
        if np.any(v < self.bounds.ua) or np.any(v > self.bounds.ub):
            worst = max(float(np.max(self.bounds.ua - v)), float(np.max(v - self.bounds.ub)))
            raise InfeasibleControl(f"control violates its bounds by {worst:.3e}")
        object.__setattr__(self, "values", v)

    def replace(self, values):
        return Control(self.grid, values, self.bounds)

    @classmethod
    def midpoint(cls, grid, bounds):
        return cls(grid, bounds.midpoint(), bounds)


def q_inner(grid, a, b):
    return grid.dt * grid.cell_area * float(np.vdot(a, b))


def q_l1(grid, a):
    """L1(Q) norm of a two-component control: components summed pointwise."""
    return grid.dt * grid.cell_area * float(np.abs(a).sum())


@dataclass(frozen=True, eq=False)
class ObjectiveContext:
    cfg: NsConfig
    y0: StaggeredField
    yd: Trajectory
    eta: Optional[Trajectory] = None
    xi: Optional[StaggeredField] = None
    eps: float = 0.0

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"Tikhonov weight must be nonnegative, got {self.eps}")
        g = self.cfg.grid
        for obj in (self.y0, self.yd, self.eta, self.xi):
            if obj is not None and not g.same_space(obj.grid):
                raise GridMismatch("context members live on different grids")
        if self.yd.data.shape[0] != g.nt + 1:
            raise GridMismatch("target trajectory has the wrong number of levels")

    @property
    def grid(self):
        return self.cfg.grid

    def target(self):
        return self.yd if self.eta is None else self.yd + self.eta

    def with_perturbation(self, xi=None, eta=None, eps=0.0):
        return ObjectiveContext(self.cfg, self.y0, self.yd, eta, xi, eps)


def _values(u):
    return np.asarray(getattr(u, "values", u), dtype=float)


def state(ctx, u):
    return solve_ns(ctx.cfg, _values(u), ctx.y0, xi=ctx.xi)


def eval_J(ctx, u, y=None):
    """Return (J(u), y) with J = 1/2 ||y - (yd + eta)||^2 + eps/2 ||u||^2."""
    uv = _values(u)
    if y is None:
        y = state(ctx, uv)
    r = y - ctx.target()
    val = 0.5 * r.inner(r)
    if ctx.eps > 0:
        val += 0.5 * ctx.eps * q_inner(ctx.grid, uv, uv)
    return val, y


def gradient(ctx, u, y=None):
    """Return (g, w): g the L2(Q) gradient of eval_J (cell-centered), w the adjoint."""
    uv = _values(u)
    if y is None:
        y = state(ctx, uv)
    g = ctx.grid
    w = solve_adjoint(LinearizationPoint(ctx.cfg, y), y - ctx.target())
    grad = faces_to_cells(g.nx, g.ny, w.data[1:])
    if ctx.eps > 0:
        grad = grad + ctx.eps * uv
    return grad, w


def hessian_quadratic(ctx, u, v, y=None, w=None, return_z=False):
    """J''(u) v^2 = ||z||^2 - 2 sum dt ((z.grad) z, w) + eps ||v||^2 with z = S'(u) v."""
    uv, vv = _values(u), _values(v)
    if y is None:
        y = state(ctx, uv)
    if w is None:
        _, w = gradient(ctx, uv, y=y)
    g = ctx.grid
    lp = LinearizationPoint(ctx.cfg, y)
    z = solve_oseen(lp, vv)
    op = ops_for(g)
    cross = sum(float(np.vdot(op.conv(z.data[n], z.data[n]), w.data[n])) for n in range(1, g.nt + 1))
    val = z.inner(z) - 2.0 * g.dt * g.cell_area * cross
    if ctx.eps > 0:
        val += ctx.eps * q_inner(g, vv, vv)
    return (val, z) if return_z else val


def fw_gap(grid, g, u, ua, ub):
    """Frank-Wolfe gap <g, u - lmo(g)>_Q (nonnegative for feasible u)."""
    pos = np.maximum(g, 0.0) * (u - ua) + np.maximum(-g, 0.0) * (ub - u)
    return grid.dt * grid.cell_area * float(pos.sum())


def normal_cone_gap(g, u, ua, ub):
    """Pointwise magnitude of the smallest rho in g + N(u) for the box."""
    at_lo = u <= ua
    at_hi = u >= ub
    r = np.abs(g)
    r = np.where(at_lo & ~at_hi, np.maximum(-g, 0.0), r)
    r = np.where(at_hi & ~at_lo, np.maximum(g, 0.0), r)
    r = np.where(at_lo & at_hi, 0.0, r)
    return r


def stationarity_from_gradient(grid, g, u, bounds):
    uv = _values(u)
    sigma = fw_gap(grid, g, uv, bounds.ua, bounds.ub)
    rho = normal_cone_gap(g, uv, bounds.ua, bounds.ub)
    return sigma, float(rho.max()) if rho.size else 0.0


def stationarity_residual(ctx, u, g=None):
    """(sigma, rho_inf): Frank-Wolfe gap and L-infinity normal-cone residual."""
    if g is None:
        g, _ = gradient(ctx, u)
    return stationarity_from_gradient(ctx.grid, g, u, u.bounds)


def bang_bang_from_gradient(g, u, bounds, tau=None):
    uv = _values(u)
    if tau is None:
        tau = 1e-6 * float(np.abs(g).max())
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    singular = np.abs(g) <= tau
    out = np.where(g > 0, bounds.ua, bounds.ub)
    out = np.where(singular, uv, out)
    return out, float(singular.mean())


def extract_bang_bang(ctx, u, tau=None, g=None):
    """Snap u to the bound selected by sign(g) where |g| > tau."""
    if g is None:
        g, _ = gradient(ctx, u)
    vals, meas = bang_bang_from_gradient(g, u, u.bounds, tau)
    return u.replace(vals), meas

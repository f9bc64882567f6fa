"""Linearized, second-order and adjoint solvers around a frozen trajectory.

With K_k the linearized convection at level k (K z = C(y^k) z + C(z) y^k),
the tangent scheme is

    z^{k} = G (z^{k-1} / dt + b^{k-1} - K_k z^k),

which is the exact derivative of the nonlinear step in :mod:`bbtrack.ns`.
The adjoint runs backwards,

    w^k = G (w^{k+1} / dt + c_k r^k - K_k^T w^k),    w^{nt+1} = 0,

with c_k the trapezoid weights, and satisfies

    <S'(u) b, r>_{L2(Q)} = sum_n dt <b^n, w^{n+1}>_{L2(Omega)}

up to the tolerance of the per-step fixed-point solves.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LinearSolveFailure
from .fields import norm
from .forcing import as_force
from .grid import ForceSeries, StaggeredField, Trajectory
from .mac import ops_for
from .ns import NsConfig, StepOperator

LIN_TOL = 1e-12
LIN_MAX = 200


@dataclass(frozen=True, eq=False)
class LinearizationPoint:
    cfg: NsConfig
    y_bar: Trajectory


def _step_fixed_point(G, base, apply_k, guess, tol, maxit, where):
    z = guess
    for _ in range(maxit):
        cand = base - G(apply_k(z))
        diff = np.linalg.norm(cand - z)
        scale = np.linalg.norm(cand)
        z = cand
        if diff <= tol * scale:
            return z
    raise LinearSolveFailure(f"{where}: fixed point stalled, relative increment {diff / max(scale, 1e-300):.3e}")


def _forward_linear(lp, forces, z0vec, tol, maxit):
    cfg = lp.cfg
    g = cfg.grid
    op = ops_for(g)
    G = StepOperator(cfg)
    dt = g.dt
    ybar = lp.y_bar.data
    out = np.empty((g.nt + 1, g.n_dof))
    out[0] = op.P(z0vec)
    for n in range(g.nt):
        yk = ybar[n + 1]
        base = G(out[n] / dt + forces[n])
        guess = 2.0 * out[n] - out[n - 1] if n > 0 else out[n]
        out[n + 1] = _step_fixed_point(G, base, lambda z: op.lin(yk, z), guess, tol, maxit,
                                       f"linearized step {n + 1}")
    return out


def solve_oseen(lp, v, z0=None, tol=LIN_TOL, maxit=LIN_MAX):
    """z = S'(u) v (plus the response to an initial datum z0)."""
    g = lp.cfg.grid
    f = as_force(g, v).data
    z0vec = np.zeros(g.n_dof) if z0 is None else z0.to_vec()
    return Trajectory(g, _forward_linear(lp, f, z0vec, tol, maxit))


def second_order_force(lp, z1, z2):
    """Face forces -(C(z1) z2 + C(z2) z1) evaluated at the new level of each interval."""
    op = ops_for(lp.cfg.grid)
    a, b = z1.data[1:], z2.data[1:]
    return np.stack([-(op.conv(a[n], b[n]) + op.conv(b[n], a[n])) for n in range(len(a))])


def solve_second_linearized(lp, z1, z2, tol=LIN_TOL, maxit=LIN_MAX):
    """S''(u)[v1, v2] given z1 = S'(u) v1 and z2 = S'(u) v2."""
    g = lp.cfg.grid
    f = second_order_force(lp, z1, z2)
    return Trajectory(g, _forward_linear(lp, f, np.zeros(g.n_dof), tol, maxit))


def solve_adjoint(lp, rhs, tol=LIN_TOL, maxit=LIN_MAX):
    """Transpose of :func:`solve_oseen`.

    ``rhs`` is a Trajectory (paired with trapezoid weights in time) or a
    ForceSeries (value n sits at level n+1 with unit weight).  The result has
    nt+1 levels; the gradient of a force functional on interval n is level n+1.
    """
    cfg = lp.cfg
    g = cfg.grid
    op = ops_for(g)
    G = StepOperator(cfg)
    dt = g.dt
    if isinstance(rhs, ForceSeries):
        r = np.vstack([np.zeros((1, g.n_dof)), rhs.data])
    else:
        r = rhs.data * g.trap_weights()[:, None]
    ybar = lp.y_bar.data
    out = np.empty((g.nt + 1, g.n_dof))
    nxt = np.zeros(g.n_dof)
    prev = None
    for k in range(g.nt, -1, -1):
        yk = ybar[k]
        base = G(nxt / dt + r[k])
        guess = 2.0 * nxt - prev if prev is not None else nxt
        out[k] = _step_fixed_point(G, base, lambda w: op.lin_T(yk, w), guess, tol, maxit,
                                   f"adjoint step {k}")
        prev, nxt = nxt, out[k]
    return Trajectory(g, out)


def adjoint_as_force(w):
    """Levels 1..nt of an adjoint trajectory, one per force interval."""
    return ForceSeries(w.grid, w.data[1:])


def ls_l1_diagnostic(lp, family, s_tilde=1.5):
    """Ratios ||z_v||_{L^s}/||v||_{L^1} and ||w_v||_{L^s}/||v||_{L^1} over a force family.

    Each force is a ForceSeries; the L1 norm of a force integrates the
    cell-averaged magnitude over space and sums over intervals times dt.
    """
    if not 1.0 <= s_tilde < 2.0:
        raise ValueError(f"s_tilde must lie in [1, 2), got {s_tilde}")
    if not family:
        raise ValueError("empty force family")
    rows = []
    for v in family:
        v = as_force(lp.cfg.grid, v)
        v1 = force_l1(v)
        if v1 == 0.0:
            rows.append({"v_l1": 0.0, "z_ls": 0.0, "w_ls": 0.0, "ratio_z": None, "ratio_w": None,
                         "degenerate": True})
            continue
        z = solve_oseen(lp, v)
        w = solve_adjoint(lp, v)
        zs = norm(z, "Ls", s_tilde)
        ws = norm(w, "Ls", s_tilde)
        rows.append({"v_l1": v1, "z_ls": zs, "w_ls": ws, "ratio_z": zs / v1, "ratio_w": ws / v1,
                     "degenerate": False})
    return rows


def force_l1(v):
    g = v.grid
    total = 0.0
    for n in range(g.nt):
        c = StaggeredField.from_vec(g, v.data[n]).cell_average()
        total += g.cell_area * float(np.sqrt((c**2).sum(axis=0)).sum())
    return g.dt * total


def shrinking_support_family(grid, scales=(1, 2, 3, 4), center=(0.5, 0.5), component=0):
    """Forces equal to a square indicator of side 2^-k (for k in scales), unit L1 norm.

    The indicator acts on one velocity component at the faces whose
    midpoints fall in the square, for every time interval.
    """
    out = []
    xu, yu = grid.u_face_coords()
    xv, yv = grid.v_face_coords()
    for k in scales:
        half = 0.5 * 2.0 ** (-k)
        xs, ys = (xu, yu) if component == 0 else (xv, yv)
        mask = (np.abs(xs - center[0]) < half) & (np.abs(ys - center[1]) < half)
        if not mask.any():
            raise ValueError(f"support of side 2^-{k} contains no faces on a {grid.nx}x{grid.ny} grid")
        fu = np.zeros_like(xu)
        fv = np.zeros_like(xv)
        (fu if component == 0 else fv)[mask] = 1.0
        fu[0] = fu[-1] = 0.0
        fv[:, 0] = fv[:, -1] = 0.0
        vec = StaggeredField(grid, fu, fv).to_vec()
        v = ForceSeries(grid, np.repeat(vec[None, :], grid.nt, axis=0))
        out.append(v * (1.0 / force_l1(v)))
    return out

"""Field-level operations: divergence, Leray projection, trilinear form, norms."""

import numpy as np

from .errors import GridMismatch, InvalidExponent
from .grid import ScalarField, StaggeredField, Trajectory, check_same_grid
from .mac import ops_for


def divergence(f):
    op = ops_for(f.grid)
    return ScalarField(f.grid, op.div(f.to_vec()))


def gradient(phi):
    op = ops_for(phi.grid)
    return StaggeredField.from_vec(phi.grid, op.grad(phi.values))


def leray_project(f, method="fft"):
    """Return (Pf, phi) with f = Pf + grad(phi), div(Pf) = 0 and mean(phi) = 0.

    ``method="cg"`` uses the iterative Neumann solve (tolerance 1e-10, cap
    20*(nx+ny)) and may raise PoissonSolveFailure; the default is a direct
    cosine-transform solve.
    """
    op = ops_for(f.grid)
    pv, phi = op.project(f.to_vec(), method=method)
    return StaggeredField.from_vec(f.grid, pv), ScalarField(f.grid, phi - phi.mean())


def trilinear_b(f1, f2, f3):
    """Skew form 1/2 [((f1.grad) f2, f3) - ((f1.grad) f3, f2)]."""
    check_same_grid(f1, f2, f3)
    op = ops_for(f1.grid)
    return f1.grid.cell_area * float(np.vdot(op.conv(f1.to_vec(), f2.to_vec()), f3.to_vec()))


def h1_seminorm_sq(grid, vec):
    op = ops_for(grid)
    return max(-grid.cell_area * float(np.vdot(op.laplacian(vec), vec)), 0.0)


def _parse_kind(kind, s):
    if isinstance(kind, tuple):
        kind, s = kind
    if kind in ("L1", "L2", "Linf", "H1"):
        return kind, s
    if kind == "Ls":
        if s is None:
            raise InvalidExponent("Ls norm needs an exponent s")
        if not (1.0 <= s < np.inf):
            raise InvalidExponent(f"exponent s must lie in [1, inf), got {s}")
        return kind, float(s)
    raise InvalidExponent(f"unknown norm kind {kind!r}")


def _snapshot_power(grid, vec, kind, s):
    """Return the per-snapshot quantity whose time integral defines the norm."""
    if kind == "L2":
        return grid.cell_area * float(np.vdot(vec, vec))
    if kind == "H1":
        return h1_seminorm_sq(grid, vec)
    mag = np.sqrt((StaggeredField.from_vec(grid, vec).cell_average() ** 2).sum(axis=0))
    if kind == "Linf":
        return float(mag.max())
    p = 1.0 if kind == "L1" else s
    return grid.cell_area * float((mag**p).sum())


def norm(f, kind="L2", s=None):
    """Discrete norms of a StaggeredField or a Trajectory.

    * ``L2``: face-weighted Hilbert norm, consistent with all inner products.
    * ``L1``, ``Ls`` (with ``s``), ``Linf``: faces are averaged to cell
      centers and the Euclidean magnitude is integrated cell by cell.
    * ``H1``: no-slip Dirichlet seminorm sqrt(-(L f, f)), a norm on fields
      that satisfy the wall conditions.

    Trajectories integrate the space norm over time with the trapezoid rule
    (``Linf`` takes the maximum over all levels, i.e. the C(Q) norm).
    """
    kind, s = _parse_kind(kind, s)
    g = f.grid
    if isinstance(f, StaggeredField):
        q = _snapshot_power(g, f.to_vec(), kind, s)
        if kind == "Linf":
            return q
        return float(np.sqrt(q)) if kind in ("L2", "H1") else q ** (1.0 / (1.0 if kind == "L1" else s))
    if isinstance(f, Trajectory):
        qs = np.array([_snapshot_power(g, f.data[k], kind, s) for k in range(len(f))])
        if kind == "Linf":
            return float(qs.max())
        total = g.dt * float(g.trap_weights() @ qs)
        p = {"L2": 2.0, "H1": 2.0, "L1": 1.0}.get(kind, s)
        return total ** (1.0 / p)
    raise GridMismatch(f"cannot take a norm of {type(f).__name__}")


def linf_l2(traj):
    """max_k ||y^k||_L2 (the L-infinity-in-time energy norm)."""
    g = traj.grid
    return float(np.sqrt(g.cell_area * np.max(np.einsum("kn,kn->k", traj.data, traj.data))))

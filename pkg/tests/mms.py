"""Manufactured Navier-Stokes solution built with sympy (shared by unit and acceptance tests)."""

import numpy as np
import sympy as sp

from bbtrack.fields import norm
from bbtrack.grid import ForceSeries, Grid, Trajectory, pack
from bbtrack.grid import StaggeredField
from bbtrack.ns import NsConfig, solve_ns

NU = 0.1
T_FINAL = 0.25


def _build():
    x, y, t = sp.symbols("x y t")
    psi = sp.sin(sp.pi * x) ** 2 * sp.sin(sp.pi * y) ** 2 * sp.cos(2 * t)
    u, v = sp.diff(psi, y), -sp.diff(psi, x)

    def momentum(c):
        lap = sp.diff(c, x, 2) + sp.diff(c, y, 2)
        return sp.diff(c, t) - NU * lap + u * sp.diff(c, x) + v * sp.diff(c, y)

    # pressure is zero: the convective term of this flow is absorbed into the forcing
    lam = lambda e: sp.lambdify((x, y, t), e, "numpy")
    return lam(u), lam(v), lam(momentum(u)), lam(momentum(v))


U, V, FU, FV = _build()


def mms_error(n, T=T_FINAL):
    """L2(Q) error of the solver against the manufactured flow on an n x n grid with dt = 2 h^2."""
    nt = int(round(T / (2.0 / n**2)))
    g = Grid(n, n, T, nt)
    xu, yu = g.u_face_coords()
    xv, yv = g.v_face_coords()

    def faces(fu, fv, tt):
        return pack(g, fu(xu, yu, tt) * np.ones_like(xu), fv(xv, yv, tt) * np.ones_like(xv))

    ts = g.times()
    force = ForceSeries(g, np.stack([faces(FU, FV, ts[k + 1]) for k in range(nt)]))
    y0 = StaggeredField.from_vec(g, faces(U, V, 0.0))
    traj = solve_ns(NsConfig(g, NU), force, y0)
    exact = Trajectory(g, np.stack([faces(U, V, tt) for tt in ts]))
    return norm(traj - exact, "L2")


def observed_orders(ns):
    errs = np.array([mms_error(n) for n in ns])
    return errs, np.log(errs[:-1] / errs[1:]) / np.log(np.array(ns[1:]) / np.array(ns[:-1]))

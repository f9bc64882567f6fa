"""Ready-made problem instances used by tests, demos and the CLI."""

import logging

import numpy as np

from .control import Control, ControlBounds, ObjectiveContext, control_shape, gradient
from .grid import Grid, StaggeredField
from .ns import NsConfig, solve_ns

log = logging.getLogger(__name__)


def vortex_control(grid, amplitude=1.0):
    """Time-constant rotational bang-bang pattern (-M sign(y-1/2), M sign(x-1/2)).

    Its four quadrants push the fluid around the center, so the pattern is
    far from any gradient field and the tracking target it generates is
    not reachable by a cheaper control.
    """
    X, Y = grid.cell_centers()
    u = np.zeros(control_shape(grid))
    u[:, 0] = -amplitude * np.sign(Y - 0.5)
    u[:, 1] = amplitude * np.sign(X - 0.5)
    return u


def sign_consistent_control(cfg, y0, u_start, bounds, max_rounds=20):
    """Iterate u <- vertex selected by the gradient at the box midpoint for target S(u).

    A fixed point is a bang-bang control whose own tracking gradient, seen
    from the midpoint, points straight at it.  Returns (u, rounds, converged).
    """
    u = np.array(u_start, dtype=float)
    mid = bounds.midpoint()
    for k in range(1, max_rounds + 1):
        yd = solve_ns(cfg, u, y0)
        g, _ = gradient(ObjectiveContext(cfg, y0, yd), mid)
        new = np.where(g > 0, bounds.ua, np.where(g < 0, bounds.ub, u))
        if np.array_equal(new, u):
            return u, k, True
        u = new
    log.warning("sign-consistent construction did not settle in %d rounds", max_rounds)
    return u, max_rounds, False


def overshoot_consistent_control(cfg, y0, u_start, bounds, max_rounds=30):
    """Iterate u <- vertex selected by -S'(u)^*(S(u) - S(0)).

    At a fixed point the gradient of the overshoot objective (target
    S(u) + beta (S(u) - S(0)), any beta > 0) points away from the box at
    every cell, so u is a strictly stationary vertex.
    Returns (u, rounds, converged).
    """
    u = np.array(u_start, dtype=float)
    zero = np.zeros_like(u)
    y_free = solve_ns(cfg, zero, y0)
    for k in range(1, max_rounds + 1):
        y = solve_ns(cfg, u, y0)
        # gradient of 1/2||S(u) - (2 S(u) - S(0))||^2 at u equals -S'(u)^*(S(u) - S(0))
        g, _ = gradient(ObjectiveContext(cfg, y0, y + (y - y_free)), u, y=y)
        new = np.where(g > 0, bounds.ua, np.where(g < 0, bounds.ub, u))
        if np.array_equal(new, u):
            return u, k, True
        u = new
    log.warning("overshoot construction did not settle in %d rounds", max_rounds)
    return u, max_rounds, False


def overshoot_instance(nx=64, ny=None, nt=128, T=1.0, nu=0.1, amplitude=1.0, beta=20.0, y0=None):
    """Tracking problem with a strictly stationary bang-bang solution and a nonvanishing adjoint.

    The target yd = S(u_bar) + beta (S(u_bar) - S(0)) overshoots the state
    of a sign-consistent vortex control u_bar, so u_bar is stationary with
    gradient -beta S'(u_bar)^*(S(u_bar) - S(0)) of the right sign in every
    cell.  Returns (ctx, u_bar).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    ny = nx if ny is None else ny
    grid = Grid(nx, ny, T, nt)
    cfg = NsConfig(grid, nu)
    if y0 is None:
        y0 = StaggeredField.zeros(grid)
    bounds = ControlBounds.box(grid, -amplitude, amplitude)
    u, _, _ = overshoot_consistent_control(cfg, y0, vortex_control(grid, amplitude), bounds)
    u_bar = Control(grid, u, bounds)
    y = solve_ns(cfg, u, y0)
    y_free = solve_ns(cfg, np.zeros_like(u), y0)
    yd = y + (y - y_free) * beta
    return ObjectiveContext(cfg, y0, yd), u_bar


def recoverable_instance(nx=64, ny=None, nt=128, T=1.0, nu=0.1, amplitude=1.0, y0=None,
                         self_consistent=True):
    """Tracking problem whose target is generated by a known bang-bang control.

    Returns (ctx, u_dagger) with bounds [-amplitude, amplitude] on both
    components and yd = S(u_dagger), so J(u_dagger) = 0 exactly.  The
    control starts from the vortex pattern; with ``self_consistent`` it is
    then replaced by the nearby sign-consistent vertex (usually a handful of
    wall-adjacent cells change), which the conditional gradient method can
    reach in a single step from the midpoint.
    """
    ny = nx if ny is None else ny
    grid = Grid(nx, ny, T, nt)
    cfg = NsConfig(grid, nu)
    if y0 is None:
        y0 = StaggeredField.zeros(grid)
    bounds = ControlBounds.box(grid, -amplitude, amplitude)
    u = vortex_control(grid, amplitude)
    if self_consistent:
        u, _, _ = sign_consistent_control(cfg, y0, u, bounds)
    u_dag = Control(grid, u, bounds)
    yd = solve_ns(cfg, u_dag.values, y0)
    ctx = ObjectiveContext(cfg, y0, yd)
    return ctx, u_dag

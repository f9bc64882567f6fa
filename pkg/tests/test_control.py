import numpy as np
import pytest
from scipy.integrate import quad

from bbtrack.control import (Control, ControlBounds, ObjectiveContext, bang_bang_from_gradient, control_shape,
                             eval_J, extract_bang_bang, gradient, hessian_quadratic, stationarity_from_gradient)
from bbtrack.errors import GridMismatch, InfeasibleControl
from bbtrack.grid import Grid, StaggeredField, Trajectory
from bbtrack.instances import vortex_control
from bbtrack.ns import NsConfig, solve_ns
from bbtrack.oseen import LinearizationPoint, solve_oseen


@pytest.fixture(scope="module")
def prob():
    g = Grid(16, 16, 0.5, 8)
    cfg = NsConfig(g, 0.1)
    u = vortex_control(g, 2.0)
    y0 = StaggeredField.zeros(g)
    yd = solve_ns(cfg, u, y0)
    rng = np.random.default_rng(0)
    noisy = Trajectory(g, yd.data + 0.2 * rng.standard_normal(yd.data.shape))
    return cfg, y0, u, ObjectiveContext(cfg, y0, yd), ObjectiveContext(cfg, y0, noisy)


def _control(g, seed, amp=2.0):
    return np.random.default_rng(seed).uniform(-amp, amp, control_shape(g))


def test_perfect_tracking(prob):
    cfg, y0, u, exact, _ = prob
    J, _ = eval_J(exact, u)
    assert J == 0.0
    g, _ = gradient(exact, u)
    assert np.abs(g).max() <= 1e-10


def test_zero_control_zero_state(prob):
    cfg, y0, _, _, noisy = prob
    J, y = eval_J(noisy, np.zeros(control_shape(cfg.grid)))
    assert np.all(y.data == 0)
    assert J == pytest.approx(0.5 * noisy.yd.inner(noisy.yd), rel=1e-14)


def test_eps_shift_of_value_and_gradient(prob):
    cfg, y0, _, _, noisy = prob
    g = cfg.grid
    u = _control(g, 1)
    sq = g.dt * g.cell_area * np.sum(u * u)
    c1, c2 = noisy.with_perturbation(eps=0.1), noisy.with_perturbation(eps=0.35)
    assert eval_J(c2, u)[0] - eval_J(c1, u)[0] == pytest.approx(0.125 * sq, rel=1e-12)
    g0, _ = gradient(noisy, u)
    g2, _ = gradient(c2, u)
    assert np.allclose(g2, g0 + 0.35 * u, rtol=0, atol=1e-14 * np.abs(g2).max())


def test_gradient_finite_difference(prob):
    cfg, y0, _, _, noisy = prob
    g = cfg.grid
    u, v = _control(g, 2, 1.0), _control(g, 3, 1.0)
    gr, _ = gradient(noisy, u)
    d = g.dt * g.cell_area * np.vdot(gr, v)
    t = 1e-4
    fd = (eval_J(noisy, u + t * v)[0] - eval_J(noisy, u - t * v)[0]) / (2 * t)
    assert abs(d - fd) <= 1e-4 * abs(d)


def test_hessian_zero_direction_and_exact_target(prob):
    cfg, y0, u, exact, noisy = prob
    g = cfg.grid
    assert hessian_quadratic(noisy, u, np.zeros(control_shape(g))) == 0.0
    v = _control(g, 4)
    z = solve_oseen(LinearizationPoint(cfg, solve_ns(cfg, u, y0)), v)
    assert hessian_quadratic(exact, u, v) == pytest.approx(z.inner(z), rel=1e-9)


def test_hessian_taylor(prob):
    cfg, y0, _, _, noisy = prob
    g = cfg.grid
    u, v = _control(g, 5, 5.0), _control(g, 6, 5.0)
    J0, y = eval_J(noisy, u)
    gr, w = gradient(noisy, u, y=y)
    d = g.dt * g.cell_area * np.vdot(gr, v)
    H = hessian_quadratic(noisy, u, v, y=y, w=w)
    ts = np.logspace(-1, -3, 5)
    rem = [abs(eval_J(noisy, u + t * v)[0] - J0 - t * d - 0.5 * t * t * H) for t in ts]
    assert 2.7 <= np.polyfit(np.log(ts), np.log(rem), 1)[0] <= 3.3


def test_stationarity_cases():
    g = Grid(8, 8, 1.0, 2)
    b = ControlBounds.box(g, -1.0, 2.0)
    u = np.zeros(control_shape(g))
    assert stationarity_from_gradient(g, np.zeros_like(u), u, b) == (0.0, 0.0)
    rng = np.random.default_rng(1)
    gr = rng.standard_normal(u.shape)
    bb = np.where(gr > 0, -1.0, 2.0)
    assert stationarity_from_gradient(g, gr, bb, b) == (0.0, 0.0)
    gr = np.ones_like(u)
    u = np.full_like(u, -1.0)
    u[1, 0, 3, 4] = 2.0
    sigma, rho = stationarity_from_gradient(g, gr, u, b)
    assert sigma == pytest.approx(3.0 * g.dt * g.cell_area, rel=1e-14)
    assert rho == 1.0


def test_bang_bang_extraction():
    g = Grid(8, 8, 1.0, 2)
    b = ControlBounds.box(g, -1.0, 1.0)
    rng = np.random.default_rng(2)
    gr = rng.standard_normal(control_shape(g))
    u = rng.uniform(-1, 1, gr.shape)
    out, meas = bang_bang_from_gradient(gr, u, b, tau=0.0)
    assert meas == 0.0 and np.all(np.abs(out) == 1.0)
    out, meas = bang_bang_from_gradient(np.zeros_like(gr), u, b, tau=0.0)
    assert meas == 1.0 and np.array_equal(out, u)


def test_singular_measure_of_sine_gradient():
    g = Grid(64, 64, 1.0, 4)
    b = ControlBounds.box(g, -1.0, 1.0)
    X, Y = g.cell_centers()
    gr = np.broadcast_to(np.sin(2 * np.pi * X) * np.cos(np.pi * Y / 4), control_shape(g)).copy()
    tau = 1e-3
    _, meas = bang_bang_from_gradient(gr, np.zeros_like(gr), b, tau=tau)
    # |sin(2 pi x)| <= tau / cos(pi y / 4) has x-measure (2/pi) arcsin(tau / cos) for each y
    analytic = quad(lambda y: 2 / np.pi * np.arcsin(tau / np.cos(np.pi * y / 4)), 0, 1)[0]
    assert abs(meas - analytic) <= 2 * g.hx


def test_extract_bang_bang_on_context(prob):
    cfg, y0, _, _, noisy = prob
    g = cfg.grid
    b = ControlBounds.box(g, -2.0, 2.0)
    u = Control(g, b.midpoint(), b)
    snapped, meas = extract_bang_bang(noisy, u)
    assert meas < 0.01
    assert np.all(np.isin(snapped.values, [-2.0, 2.0]) | (snapped.values == 0.0))


def test_control_validation():
    g = Grid(8, 8, 1.0, 2)
    b = ControlBounds.box(g, -1.0, 1.0)
    with pytest.raises(InfeasibleControl):
        Control(g, np.full(control_shape(g), 1.5), b)
    with pytest.raises(GridMismatch):
        Control(g, np.zeros((2, 2, 4, 4)), b)
    with pytest.raises(ValueError):
        ControlBounds(np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        ObjectiveContext(NsConfig(g, 0.1), StaggeredField.zeros(g), Trajectory.zeros(g), eps=-1.0)

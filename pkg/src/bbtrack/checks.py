"""Built-in invariant suites behind ``bbtrack verify``."""

import time
from dataclasses import dataclass

import numpy as np

from .control import ControlBounds, ObjectiveContext, control_shape, eval_J, gradient, hessian_quadratic, q_inner
from .fields import divergence, leray_project, norm, trilinear_b
from .grid import ForceSeries, Grid, StaggeredField, Trajectory
from .ns import NsConfig, solve_ns
from .oseen import LinearizationPoint, adjoint_as_force, solve_adjoint, solve_oseen
from .subreg import (BoxProblem, ekeland_point, minimizer, theorem_roundtrip, verify_ekeland)


@dataclass
class Check:
    name: str
    measured: float
    required: str
    passed: bool

    def row(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<42s} measured={self.measured:<12.4g} required {self.required}"


def random_field(grid, rng, div_free=False):
    f = StaggeredField.from_vec(grid, rng.standard_normal(grid.n_dof))
    return leray_project(f)[0] if div_free else f


def operators_suite(n=64, seed=0):
    rng = np.random.default_rng(seed)
    grid = Grid(n, n)
    t0 = time.perf_counter()
    out = []
    worst = 0.0
    for _ in range(3):
        a, b, c = (random_field(grid, rng) for _ in range(3))
        scale = norm(a, "L2") * norm(b, "L2") * norm(c, "L2") / grid.cell_area
        worst = max(worst, abs(trilinear_b(a, b, c) + trilinear_b(a, c, b)) / scale,
                    abs(trilinear_b(a, b, b)) / scale)
    out.append(Check("trilinear antisymmetry (relative)", worst, "<= 1e-13", worst <= 1e-13))
    f = random_field(grid, rng)
    p, _ = leray_project(f)
    div = float(np.abs(divergence(p).values).max())
    out.append(Check("projection divergence (max)", div, "<= 1e-9", div <= 1e-9))
    pp, _ = leray_project(p)
    idem = float(np.abs(pp.to_vec() - p.to_vec()).max() / np.abs(p.to_vec()).max())
    out.append(Check("projection idempotence (relative)", idem, "<= 1e-9", idem <= 1e-9))
    orth = abs(p.inner(f - p)) / (norm(f, "L2") ** 2)
    out.append(Check("projection orthogonality (relative)", orth, "<= 1e-12", orth <= 1e-12))
    one = StaggeredField.from_functions(grid, lambda x, y: np.ones_like(x), lambda x, y: np.zeros_like(x))
    # the interior u faces cover the unit square minus two half columns of width h/2
    l2 = norm(one, "L2") ** 2
    expect = 1.0 - grid.hx
    out.append(Check("L2 norm of a unit field", abs(l2 - expect), "<= 1e-12", abs(l2 - expect) <= 1e-12))
    dt = time.perf_counter() - t0
    out.append(Check("operator suite runtime [s]", dt, "< 10", dt < 10))
    return out


def _toy_problem(n=16, nt=16, seed=1, amp=10.0):
    # strong forcing keeps the cubic Taylor term well above rounding over three decades of t
    grid = Grid(n, n, 1.0, nt)
    cfg = NsConfig(grid, 0.1)
    rng = np.random.default_rng(seed)
    u_src = rng.uniform(-amp, amp, control_shape(grid))
    yd = solve_ns(cfg, u_src, StaggeredField.zeros(grid))
    yd = Trajectory(grid, yd.data + 0.1 * rng.standard_normal(yd.data.shape))
    return ObjectiveContext(cfg, StaggeredField.zeros(grid), yd), rng


def adjoint_suite(n=32, nt=32, trials=5, seed=0):
    grid = Grid(n, n, 1.0, nt)
    cfg = NsConfig(grid, 0.1)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(trials):
        u = rng.uniform(-2, 2, control_shape(grid))
        y = solve_ns(cfg, u, StaggeredField.zeros(grid))
        lp = LinearizationPoint(cfg, y)
        v = ForceSeries(grid, rng.standard_normal((nt, grid.n_dof)))
        r = Trajectory(grid, rng.standard_normal((nt + 1, grid.n_dof)))
        lhs = solve_oseen(lp, v).inner(r)
        rhs = v.inner(adjoint_as_force(solve_adjoint(lp, r)))
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    dt = time.perf_counter() - t0
    return [Check("adjoint identity (relative)", worst, "<= 1e-9", worst <= 1e-9),
            Check("adjoint suite runtime [s]", dt, "< 60", dt < 60)]


def gradient_suite(trials=5, seed=1, t=1e-4):
    ctx, rng = _toy_problem(seed=seed)
    grid = ctx.grid
    worst = 0.0
    taylor = []
    for k in range(trials):
        u = rng.uniform(-10, 10, control_shape(grid))
        v = rng.uniform(-10, 10, control_shape(grid))
        J0, y = eval_J(ctx, u)
        g, w = gradient(ctx, u, y=y)
        d = q_inner(grid, g, v)
        fd = (eval_J(ctx, u + t * v)[0] - eval_J(ctx, u - t * v)[0]) / (2 * t)
        worst = max(worst, abs(fd - d) / abs(d))
        if k == 0:
            H = hessian_quadratic(ctx, u, v, y=y, w=w)
            ts = np.logspace(0, -3, 7)
            rem = [abs(eval_J(ctx, u + s * v)[0] - J0 - s * d - 0.5 * s * s * H) for s in ts]
            taylor = np.polyfit(np.log(ts), np.log(rem), 1)[0]
    return [Check("finite-difference gradient (relative)", worst, "<= 1e-4", worst <= 1e-4),
            Check("second-order Taylor remainder slope", taylor, "in [2.7, 3.3]", 2.7 <= taylor <= 3.3)]


def appendix_suite(n_problems=100, seed=0):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    fals = 0
    for k in range(n_problems):
        n = int(rng.integers(1, 7))
        rank = int(rng.integers(1, n + 1)) if k % 4 == 0 else n
        p = BoxProblem.random_psd_quadratic(n, rng, rank=rank)
        fals += len(theorem_roundtrip(p, minimizer(p), 1.0, seed=k).falsifications)
    quartic_bad = 0
    for mu in (3.0,):
        q = BoxProblem.quartic(np.ones(3), np.zeros(3), np.zeros(3), -np.ones(3), np.ones(3))
        rep = theorem_roundtrip(q, np.zeros(3), mu)
        fals += len(rep.falsifications)
        quartic_bad += int(not (rep.growth_holds and rep.subregularity_holds))
    ek_fail = 0
    for k in range(20):
        p = BoxProblem.random_psd_quadratic(3, rng)
        ub = minimizer(p)
        u = p.project(ub + rng.uniform(-0.2, 0.2, 3))
        eps = p.f(u) - p.f(ub) + 1e-12
        lam = 0.5
        u_hat, rho_hat = ekeland_point(p, u, eps, lam)
        ek_fail += int(not all(verify_ekeland(p, u, u_hat, rho_hat, eps, lam).values()))
    dt = time.perf_counter() - t0
    return [Check("roundtrip falsifications", fals, "== 0", fals == 0),
            Check("quartic family confirmed both ways (failures)", quartic_bad, "== 0", quartic_bad == 0),
            Check("Ekeland re-verification failures", ek_fail, "== 0", ek_fail == 0),
            Check("appendix suite runtime [s]", dt, "< 300", dt < 300)]


SUITES = {"operators": operators_suite, "adjoint": adjoint_suite, "gradient": gradient_suite,
          "appendix": appendix_suite}

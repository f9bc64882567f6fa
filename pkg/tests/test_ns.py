import json
import warnings

import numpy as np
import pytest

from bbtrack.errors import CflWarning, NonlinearDivergence
from bbtrack.fieldio import read_field
from bbtrack.fields import gradient, leray_project, linf_l2, norm
from bbtrack.grid import Grid, ScalarField, StaggeredField, Trajectory
from bbtrack.instances import vortex_control
from bbtrack.ns import NsConfig, solve_ns, solve_ns_perturbed

from mms import observed_orders


def test_zero_is_fixed_point():
    g = Grid(8, 8, 1.0, 4)
    y = solve_ns(NsConfig(g, 0.1), None, StaggeredField.zeros(g))
    assert np.all(y.data == 0)


def test_config_validation():
    g = Grid(8, 8)
    for kw in ({"nu": 0.0}, {"nu": 0.1, "picard_tol": 1.5}, {"nu": 0.1, "picard_max": 0}):
        with pytest.raises(ValueError):
            NsConfig(g, **kw)


def test_manufactured_solution_small_grids():
    errs, orders = observed_orders([16, 32])
    assert errs[1] < errs[0]
    assert orders[0] >= 1.7


def test_states_are_divergence_free():
    g = Grid(16, 16, 0.5, 8)
    y = solve_ns(NsConfig(g, 0.1), vortex_control(g, 2.0), StaggeredField.zeros(g))
    assert max(s["div_max"] for s in y.info["steps"]) <= 1e-9


def test_energy_constant_stable_under_refinement():
    consts = []
    for n in (16, 32):
        g = Grid(n, n, 0.5, n // 2)
        rng = np.random.default_rng(3)
        coarse = rng.uniform(-1, 1, (8, 2, 4, 4))
        u = np.kron(coarse, np.ones((g.nt // 8, 1, n // 4, n // 4)))
        y0 = leray_project(StaggeredField.from_functions(
            g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), lambda x, y: 0 * x))[0]
        y = solve_ns(NsConfig(g, 0.1), u, y0)
        lhs = linf_l2(y) + norm(y, "H1")
        rhs = np.sqrt(g.dt * g.cell_area * np.sum(u**2)) + norm(y0)
        consts.append(lhs / rhs)
    assert 0.5 < consts[1] / consts[0] < 2.0


def test_picard_stall_raises():
    g = Grid(8, 8, 1.0, 2)
    with pytest.raises(NonlinearDivergence) as info:
        solve_ns(NsConfig(g, 0.01, picard_tol=1e-14, picard_max=2), vortex_control(g, 50.0), StaggeredField.zeros(g))
    assert info.value.step == 1


def test_cfl_warning_is_recorded_not_fatal():
    # strong viscosity keeps Picard contractive at a large time step
    g = Grid(8, 8, 1.0, 2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        y = solve_ns(NsConfig(g, 1.0), vortex_control(g, 50.0), StaggeredField.zeros(g))
    assert y.info["cfl_warning"] and y.info["cfl_max"] > 1
    assert any(issubclass(w.category, CflWarning) for w in caught)


def test_checkpoints(tmp_path):
    g = Grid(8, 8, 0.5, 3)
    y = solve_ns(NsConfig(g, 0.1), vortex_control(g), StaggeredField.zeros(g), checkpoint_dir=tmp_path)
    for k in range(4):
        snap = read_field(tmp_path / ("y_%06d.fld" % k))
        assert np.array_equal(snap.to_vec(), y.data[k])
    lines = (tmp_path / "run.json-lines").read_text().splitlines()
    assert [json.loads(s)["step"] for s in lines] == [1, 2, 3]


def test_zero_perturbation_is_bitwise_identical():
    g = Grid(8, 8, 0.5, 4)
    cfg = NsConfig(g, 0.1)
    u = vortex_control(g)
    y = solve_ns(cfg, u, StaggeredField.zeros(g))
    yx = solve_ns_perturbed(cfg, u, StaggeredField.zeros(g), StaggeredField.zeros(g))
    assert np.array_equal(y.data, yx.data)


def test_gradient_perturbation_is_projected_away():
    g = Grid(16, 16, 0.5, 4)
    cfg = NsConfig(g, 0.1)
    u = vortex_control(g)
    xc, yc = g.cell_centers()
    xi = gradient(ScalarField(g, np.cos(np.pi * xc) * np.cos(np.pi * yc)))
    y = solve_ns(cfg, u, StaggeredField.zeros(g))
    yx = solve_ns_perturbed(cfg, u, StaggeredField.zeros(g), xi)
    assert np.abs(yx.data - y.data).max() <= 10 * cfg.picard_tol
    assert yx.info["initial_projection_correction"] > 0.1


def test_initial_perturbation_gap_is_proportional():
    g = Grid(16, 16, 0.5, 8)
    cfg = NsConfig(g, 0.1)
    u = vortex_control(g, 2.0)
    shape = leray_project(StaggeredField.from_functions(
        g, lambda x, y: np.sin(2 * np.pi * y) * x * (1 - x), lambda x, y: x * y))[0]
    y = solve_ns(cfg, u, StaggeredField.zeros(g))
    ratios = []
    for a in (1e-1, 1e-2, 1e-3):
        xi = a * (1.0 / norm(shape)) * shape
        gap = norm(solve_ns_perturbed(cfg, u, StaggeredField.zeros(g), xi) - y, "Linf")
        ratios.append(gap / a)
    assert max(ratios) / min(ratios) < 2.0

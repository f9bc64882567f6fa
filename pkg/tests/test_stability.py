import json

import numpy as np
import pytest

from bbtrack.control import Control, q_l1
from bbtrack.errors import DegenerateShape, InsufficientFeasibleSamples
from bbtrack.fields import divergence, norm
from bbtrack.grid import Grid
from bbtrack.instances import recoverable_instance
from bbtrack.optimizer import OptimizerConfig, solve
from bbtrack.stability import (PerturbationSpec, curvature_probe, fit_rate, gap_diagnostics, growth_exponent_probe,
                               make_perturbation, mixed_specs, perturbed_context, rate_experiment)
from bbtrack.subreg import BoxProblem


@pytest.fixture(scope="module")
def recov():
    return recoverable_instance(16, nt=16)


@pytest.mark.parametrize("xi_mode,eta_mode", [("SmoothRandom", "SmoothRandom"), ("SingleVortex", "Checker")])
def test_perturbation_magnitudes(xi_mode, eta_mode):
    g = Grid(16, 16, 1.0, 8)
    spec = PerturbationSpec(0.3, 0.02, 0.0, 5, xi_mode, eta_mode)
    xi, eta = make_perturbation(g, spec)
    assert norm(xi, "H1") == pytest.approx(0.3, rel=1e-10)
    assert norm(eta, "L2") == pytest.approx(0.02, rel=1e-10)
    assert np.abs(divergence(xi).values).max() <= 1e-10
    assert np.abs(eta.data).max() <= 10 * 0.02 * (1 + 1e-12)


def test_single_vortex_norm_64():
    xi, _ = make_perturbation(Grid(64, 64), PerturbationSpec(0.1, 0.0, xi_mode="SingleVortex"))
    assert abs(norm(xi, "H1") - 0.1) <= 1e-10 * 0.1


def test_perturbation_zero_and_deterministic():
    g = Grid(8, 8, 1.0, 4)
    xi, eta = make_perturbation(g, PerturbationSpec())
    assert np.all(xi.to_vec() == 0) and np.all(eta.data == 0)
    spec = PerturbationSpec(0.1, 0.1, 0.0, 11)
    a, b = make_perturbation(g, spec), make_perturbation(g, spec)
    assert np.array_equal(a[0].to_vec(), b[0].to_vec()) and np.array_equal(a[1].data, b[1].data)


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(-1.0)
    with pytest.raises(ValueError):
        PerturbationSpec(xi_mode="Spiral")
    assert PerturbationSpec(0.1, 0.2, 0.3).total_size == pytest.approx(0.6)


def test_degenerate_shape(monkeypatch):
    import bbtrack.stability as st
    from bbtrack.grid import StaggeredField
    monkeypatch.setattr(st, "_xi_shape", lambda grid, mode, rng: StaggeredField.zeros(grid))
    with pytest.raises(DegenerateShape):
        make_perturbation(Grid(8, 8), PerturbationSpec(0.1))


def _quadratic_toy(n=6):
    # u_bar = 0 is an interior minimizer of 1/2 |u|^2: G(d) = |d|^2 grows with exponent mu = 1
    return BoxProblem.quadratic(np.eye(n), np.zeros(n), -np.ones(n), np.ones(n)), np.zeros(n)


def test_growth_probe_quadratic_toy():
    p, ub = _quadratic_toy()
    mu_hat, table = growth_exponent_probe(p, ub, [0.05, 0.1, 0.2, 0.4], samples_per_distance=4)
    assert 0.9 <= mu_hat <= 1.1
    assert all(r["violations"] == 0 for r in table)


def test_growth_probe_preconditions():
    p, ub = _quadratic_toy()
    with pytest.raises(ValueError):
        growth_exponent_probe(p, ub, [0.1])
    with pytest.raises(ValueError):
        growth_exponent_probe(p, ub, [0.0, 0.1, 0.2])
    with pytest.raises(InsufficientFeasibleSamples):
        growth_exponent_probe(p, ub, [0.1, 0.2, 100.0], samples_per_distance=2)


def test_growth_probe_logs_violations(caplog):
    # maximizer of a concave quadratic: G < 0 everywhere, logged rather than raised
    n = 4
    p = BoxProblem.quadratic(-np.eye(n), np.zeros(n), -np.ones(n), np.ones(n))
    mu_hat, table = growth_exponent_probe(p, np.zeros(n), [0.1, 0.2, 0.4], samples_per_distance=2)
    assert all(r["violations"] == 2 for r in table)
    assert np.isnan(mu_hat)
    assert "growth violated" in caplog.text


def test_curvature_probe_constant_hessian():
    p, ub = _quadratic_toy()
    table = curvature_probe(p, ub, [0.0, 0.1, 0.2])
    assert [r["degenerate"] for r in table if r["distance"] == 0.0] == [True, True]
    assert all(r["ratio"] == 0.0 for r in table if not r["degenerate"])


def test_curvature_probe_ns_table_finite(recov):
    ctx, u_dag = recov
    table = curvature_probe(ctx, u_dag, [0.4, 0.2, 0.1, 0.05], samples=1, thetas=(0.5, 1.0))
    ratios = [r["ratio"] for r in table]
    assert len(ratios) == 8 and np.all(np.isfinite(ratios))


def test_synthetic_fit_exact_law():
    sizes = np.logspace(-4, -1, 7)
    fit = fit_rate([(s, 2.0 * s**0.5) for s in sizes])
    assert abs(fit.slope - 0.5) <= 1e-12
    assert abs(fit.intercept - np.log(2.0)) <= 1e-12
    assert abs(fit.r2 - 1.0) <= 1e-12
    assert not fit.nonmonotone_tail
    d = json.loads(fit.to_json(tag=1))
    assert d["n_points"] == 7 and d["tag"] == 1
    with pytest.raises(ValueError):
        fit_rate([(1.0, 1.0), (2.0, 2.0)])


def test_mixed_specs_split_sizes():
    specs = mixed_specs([0.3, 0.03])
    assert [s.spec_id for s in specs] == ["spec000", "spec001"]
    assert specs[0].xi_magnitude == specs[0].eta_magnitude == specs[0].eps == pytest.approx(0.1)


def test_gap_diagnostics_zero_spec(recov):
    ctx, u_dag = recov
    rec = gap_diagnostics(ctx, u_dag, PerturbationSpec(), u_bar=u_dag)
    assert rec["state_gap_C"] == 0.0 and rec["linear_gap_L2"] == 0.0 and rec["adjoint_gap"] == 0.0
    assert rec["l1_distance"] == 0.0


def test_gap_diagnostics_first_order_scaling(recov):
    ctx, u_dag = recov
    full = gap_diagnostics(ctx, u_dag, PerturbationSpec(0.02, 0.02, 0.0, 3))
    half = gap_diagnostics(ctx, u_dag, PerturbationSpec(0.01, 0.01, 0.0, 3))
    for key in ("linear_gap_L2", "adjoint_gap", "state_gap_C"):
        assert 0.3 <= half[key] / (0.5 * full[key]) <= 3.0


def test_gap_diagnostics_inclusion_at_perturbed_solution(recov):
    ctx, u_dag = recov
    spec = PerturbationSpec(0.01, 0.01, 0.01, 4)
    pctx, _, _ = perturbed_context(ctx, spec)
    rep = solve(pctx, OptimizerConfig(method="ProjectedGradient", step_rule="Armijo", sigma_tol=1e-13), u_dag)
    rec = gap_diagnostics(ctx, rep.u_star, spec, u_bar=u_dag)
    assert rec["inclusion_residual"] <= 1e-6
    assert rec["l1_distance"] == pytest.approx(q_l1(ctx.grid, rep.u_star.values - u_dag.values))


def test_tikhonov_sweep(recov):
    ctx, u_dag = recov
    eps = [1e-1, 1e-2, 1e-3, 1e-4]
    specs = [PerturbationSpec(eps=e, spec_id=f"e{k}") for k, e in enumerate(eps)] + [PerturbationSpec(spec_id="zero")]
    fit, recs = rate_experiment(ctx, u_dag, specs, OptimizerConfig(step_rule="Armijo", sigma_tol=1e-13))
    dists = [r["l1_distance"] for r in recs[:4]]
    assert all(b <= a for a, b in zip(dists, dists[1:]))
    assert fit.slope > 0
    assert fit.excluded_ids == ["zero"] and recs[4]["error"] == "zero size"

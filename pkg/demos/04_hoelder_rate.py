"""
Hoelder rate of perturbed solutions
===================================

The overshoot target yd = S(u_bar) + beta (S(u_bar) - S(0)) makes u_bar a
strictly stationary bang-bang vertex with a nonvanishing adjoint.  The
growth probe estimates mu, then mixed (xi, eta, eps) perturbations are
solved and the L1 distance to u_bar is fitted against the perturbation size.
A reduced grid keeps the run short; the acceptance test uses 64x64, nt = 128.
"""

import numpy as np

from bbtrack import OptimizerConfig, growth_exponent_probe, overshoot_instance, rate_experiment
from bbtrack.stability import mixed_specs

ctx, u_bar = overshoot_instance(nx=32, nt=64, beta=20.0)
mu_hat, table = growth_exponent_probe(ctx, u_bar, [0.2, 0.1, 0.05, 0.02, 0.01, 0.005], samples_per_distance=4)
print("mu_hat =", round(mu_hat, 3))

specs = mixed_specs(np.logspace(-3, -1, 8))
fit, records = rate_experiment(ctx, u_bar, specs, OptimizerConfig(step_rule="Armijo", sigma_tol=1e-13, max_iters=500),
                               mu_hat=mu_hat)
for r in records:
    print(f"{r['spec_id']}  size {r['total_size']:.2e}  L1 distance {r['l1_distance']:.3e}  "
          f"iterations {r['iterations']}  envelope {fit.envelope(r['total_size']):.3e}")
print(f"slope {fit.slope:.3f}  1/mu_hat {1 / mu_hat:.3f}  r2 {fit.r2:.3f}")

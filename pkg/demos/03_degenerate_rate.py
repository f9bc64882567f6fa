"""
Why exact tracking is a poor rate experiment
============================================

With yd = S(u_dag) the adjoint vanishes at the solution, so the growth of
J near u_dag is quadratic in the L2 sense but tiny in L1, and perturbed
solutions drift far from u_dag.  The fitted rate then disagrees with the
growth exponent.  Compare with 04_hoelder_rate.py.
"""

import numpy as np

from bbtrack import OptimizerConfig, growth_exponent_probe, rate_experiment, recoverable_instance
from bbtrack.stability import mixed_specs

ctx, u_dag = recoverable_instance(nx=16, nt=16)
mu_hat, table = growth_exponent_probe(ctx, u_dag, [0.2, 0.1, 0.05, 0.02], samples_per_distance=4)
for row in table:
    print(f"distance {row['distance']:.3f}  min G = {row['min_G']:.3e}")
print("mu_hat =", mu_hat)

fit, records = rate_experiment(ctx, u_dag, mixed_specs(np.logspace(-3, -1, 6)),
                               OptimizerConfig(step_rule="Armijo", sigma_tol=1e-13, max_iters=300), mu_hat=mu_hat)
for r in records:
    print(f"{r['spec_id']}  size {r['total_size']:.2e}  L1 distance {r['l1_distance']:.3e}")
print(f"slope {fit.slope:.3f} (1/mu_hat = {1 / mu_hat:.3f}), r2 {fit.r2:.3f}")

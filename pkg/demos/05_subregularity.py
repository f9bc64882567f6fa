"""
Growth and subregularity in finite dimensions
=============================================

Box-constrained toy problems where every solution of the perturbed
optimality system can be enumerated, so the growth and subregularity
properties can be checked both ways.
"""

import numpy as np

from bbtrack import BoxProblem, check_growth, check_subregularity, ekeland_point, theorem_roundtrip
from bbtrack.subreg import minimizer

# 1/2 u^2 on [-1, 1]: quadratic growth, Lipschitz subregularity
half = BoxProblem.quadratic(np.eye(1), np.zeros(1), [-1.0], [1.0])
print("1/2 u^2:", check_subregularity(half, [0.0], mu=1.0))

# u^4/4: growth of order 4, so the exponent 1/3 is right and 1 is wrong
quartic = BoxProblem.quartic(np.ones(1), np.zeros(1), np.zeros(1), [-1.0], [1.0])
print("u^4/4 with mu=3:", check_subregularity(quartic, [0.0], mu=3.0)[0])
kappa, violations = check_subregularity(quartic, [0.0], mu=1.0)
print("u^4/4 with mu=1:", violations[:1])

c_hat, worst = check_growth(half, [0.0], mu=1.0, radius=1.0)
print("growth constants:", c_hat)

# a near-minimizer is close to a point with a small optimality residual
print("Ekeland point:", ekeland_point(half, [0.1], 0.005, 0.1))

rng = np.random.default_rng(0)
p = BoxProblem.random_psd_quadratic(5, rng)
print(theorem_roundtrip(p, minimizer(p), mu=1.0).to_json())

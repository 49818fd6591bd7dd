"""Two lags: one equality pins the first lag, inequalities squeeze the second.

The 8x7 representation has a one-dimensional null space whose single
equality identifies beta1 in closed form.  beta2 has no equality at all,
yet the Hankel conditions confine it to a band of width ~1e-3 -- verified
here against the independent mixture-feasibility oracle.
"""

import numpy as np

from panelogit import (
    DiscreteMixture, ModelSpec, Theta, build_representation, equality_residuals,
    feasibility_check, left_null_basis, population_probs, solve_closed_forms,
    theta_membership,
)

spec = ModelSpec(family="ar2", T=3, covariates="none")
theta0 = Theta((0.5, 0.3))
mix = DiscreteMixture((-2.0, -0.5, 0.5, 1.5), (0.3, 0.3, 0.2, 0.2))
probs = population_probs(spec, theta0, mix)

rep = build_representation(spec, theta0)
print(f"G is {rep.G.shape[0]}x{rep.G.shape[1]} with rank {rep.rank}; "
      f"null-space dimension {left_null_basis(rep).dim}")
print(f"equality residual at the truth: "
      f"{np.max(np.abs(equality_residuals(theta0, probs))):.1e}")

roots = solve_closed_forms(probs)
print(f"closed-form beta1_hat = {roots.roots[0].params['beta1']:.12f}  (truth 0.5)")

print("\nmembership along beta2 at beta1 = 0.5:")
for b2 in (0.25, 0.299, 0.2995, 0.3, 0.3005, 0.301, 0.35):
    m = theta_membership(Theta((0.5, b2)), probs, eq_tol=1e-6)
    f = feasibility_check(Theta((0.5, b2)), probs)
    print(f"  beta2 = {b2:<7g} hankel: {str(m.is_member):5s}  "
          f"oracle: {str(f.feasible):5s}  margin {m.slack:+.2e}")

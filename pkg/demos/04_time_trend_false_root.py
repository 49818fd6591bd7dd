"""Time trend: equalities leave two roots, inequalities kill the false one.

The two moment equalities are nonlinear in (B, C) and admit a second,
spurious solution.  Checking the sign of the leading generalized moment at
each root -- it is the mass of a positive measure, so it must be positive --
restores point identification without variation in the initial condition.
"""

import numpy as np

from panelogit import (
    DiscreteMixture, ModelSpec, Theta, build_H, build_representation,
    filter_roots, moment_vector, order_permutation, population_probs,
    solve_numeric, weight_ordered_histories,
)

spec = ModelSpec(family="ar1", T=3, covariates="time_trend")
theta0 = Theta(0.5, (0.8,))
probs = population_probs(spec, theta0, DiscreteMixture((-2.0, 1.0), (0.5, 0.5)))

perm = order_permutation(3, weight_ordered_histories(3))
print("population probabilities:", np.round(probs.cell()[perm], 4))

roots = solve_numeric(probs)
print(f"\nequality roots found in [-4, 4]^2 (trivial root excluded):")
for root in roots.roots:
    print(f"  (beta, gamma) = ({root.params['beta']:.4f}, {root.params['gamma']:.4f})"
          f"   residual {root.residual:.1e}")

for root in roots.roots:
    th = root.theta(spec)
    rep = build_representation(spec, th)
    r = moment_vector(rep, build_H(rep), probs.cell())
    verdict = "positive: admissible" if r.r[0] > 0 else "negative: impossible"
    print(f"mass of the transformed measure at ({th.beta[0]:.3f}, {th.gamma[0]:.3f}):"
          f" {r.r[0]:+.4f}  ({verdict})")

ids = filter_roots(roots, probs)
kept = ids.members[0]
print(f"\nidentified set after the inequality filter: "
      f"{{({kept.beta[0]:.4f}, {kept.gamma[0]:.4f})}}")

"""Sharp identification for dynamic panel logit models with fixed effects.

The package reduces the infinite-dimensional question "is there a latent
distribution rationalizing these choice probabilities?" to linear algebra:
moment equalities from the left null space of the representation matrix G,
and moment inequalities from positive semidefiniteness of small Hankel
matrices built from the generalized moments r = H P.
"""

from .model import (
    AR1,
    AR2,
    DegenerateModelWarning,
    ModelSpec,
    Representation,
    Theta,
    UnsupportedModelError,
    build_representation,
    denominator_g,
    enumerate_histories,
    likelihood_direct,
    likelihood_vector,
    order_permutation,
    reverse_ordered_histories,
    weight_ordered_histories,
)
from .poly import PolyA, poly_from_linear_factors
from .dgp import DiscreteMixture, PopulationProbs, population_cell, population_probs, simulate_panel
from .equalities import (
    NullBasis,
    RankDeficientError,
    Root,
    RootSet,
    equality_residuals,
    left_null_basis,
    solve_closed_forms,
    solve_numeric,
    trace_solution_curves,
)
from .inequalities import (
    MembershipReport,
    MomentVector,
    ThetaMembership,
    batch_membership_csv,
    build_H,
    moment_vector,
    stieltjes_membership,
    theta_membership,
)
from .idset import (
    GridRegion,
    IdentifiedSet,
    MisspecifiedModelError,
    filter_roots,
    free_parameters,
    grid_identify,
    sharp_bounds_T2,
)
from .functionals import (
    EtaVector,
    FunctionalSpec,
    InadmissibleFunctionalError,
    eta_vector,
    functional_bounds,
    functional_point_value,
)
from .oracle import (
    FeasibilityGrid,
    FeasibilityResult,
    ReconstructedQ,
    feasibility_check,
    reconstruct_Q,
)

__version__ = "0.1.0"

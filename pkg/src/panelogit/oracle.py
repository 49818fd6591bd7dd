"""Brute-force validation routes independent of the Hankel machinery.

Feasibility of theta is checked by fitting a nonnegative mixture on a
dense fixed-effect grid to the observed probabilities (a discretized
version of the existence problem), and a representing distribution is
reconstructed from generalized moments by solving the square
Vandermonde-type system used in the sharpness argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .dgp import PopulationProbs
from .model import Representation, Theta, enumerate_histories, likelihood_direct

__all__ = [
    "FeasibilityGrid",
    "FeasibilityResult",
    "ReconstructedQ",
    "feasibility_check",
    "reconstruct_Q",
]

SIMPLEX_WEIGHT = 1e3      # weight of the sum-to-one row, times ||P||
NEG_WEIGHT_TOL = -1e-8


@dataclass(frozen=True)
class FeasibilityGrid:
    """Dense alpha grid approximating the latent support.

    Atoms beyond [-8, 8] change the fitted probabilities by less than 1e-4
    for the parameter ranges exercised here; the grid is the documented
    approximation boundary of this oracle.
    """

    lo: float = -8.0
    hi: float = 8.0
    n: int = 401
    tol_feas: float = 1e-6

    @property
    def alphas(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    residual: float                      # worst cell
    cell_residuals: dict = field(default_factory=dict)
    cell_weights: dict = field(default_factory=dict)


def _likelihood_matrix(spec, theta, A, x_index, y0):
    """Columns are likelihood vectors at the grid atoms (vectorized in A)."""
    return np.array([
        likelihood_direct(spec, theta, h, A, x_index=x_index, y0=y0)
        for h in enumerate_histories(spec.T)
    ])


def feasibility_check(theta: Theta, probs: PopulationProbs,
                      grid: FeasibilityGrid = FeasibilityGrid()) -> FeasibilityResult:
    """Does any grid mixture rationalize every cell of P at this theta?

    Solves ``min_pi ||P - L pi||_2`` subject to ``pi >= 0`` and
    ``sum pi = 1`` by nonnegative least squares on the system augmented
    with a heavily weighted sum-to-one row.  Feasible iff the unweighted
    residual stays below ``tol_feas`` in every (x, y0) cell.
    """
    A = np.exp(grid.alphas)
    worst = 0.0
    residuals, weights = {}, {}
    for (xi, y0), p in probs.items():
        L = _likelihood_matrix(probs.spec, theta, A, xi, y0)
        w = SIMPLEX_WEIGHT * max(1e-300, float(np.linalg.norm(p)))
        aug = np.vstack([L, w * np.ones((1, L.shape[1]))])
        rhs = np.concatenate([p, [w]])
        pi, _ = nnls(aug, rhs)
        res = float(np.linalg.norm(p - L @ pi))
        residuals[(xi, y0)] = res
        weights[(xi, y0)] = pi
        worst = max(worst, res)
    return FeasibilityResult(
        feasible=worst < grid.tol_feas, residual=worst,
        cell_residuals=residuals, cell_weights=weights,
    )


@dataclass(frozen=True)
class ReconstructedQ:
    """Discrete representing distribution recovered from moments."""

    alphas: np.ndarray        # log of the support points
    weights: np.ndarray
    nonnegative: bool
    retries: int


def _nnls_support_proposal(rep, r, grid):
    """Support atoms from a nonnegative grid fit of the moment conditions.

    Matching the generalized moments on a dense atom grid by NNLS puts mass
    on a handful of atoms; using those (padded to full size with inert
    fill-in atoms) as the interpolation support yields nonnegative weights
    whenever the fit is tight, including boundary moment sequences whose
    representing measure is essentially unique.
    """
    n = len(r)
    A = np.exp(grid.alphas)
    M = np.vander(A, n, increasing=True).T / rep.g(A)
    M[0] = 1.0
    rhs = np.concatenate([[1.0], r[1:]])
    pi, _ = nnls(M, rhs)
    active = A[pi > 1e-12]
    if len(active) > n:
        active = A[np.argsort(pi)[-n:]]
    fill = np.exp(np.linspace(-7.5, 7.5, n + len(active) + 1))
    for a in fill:
        if len(active) == n:
            break
        if np.min(np.abs(np.log(active) - np.log(a))) > 1e-6:
            active = np.append(active, a)
    return np.sort(active)


def reconstruct_Q(rep: Representation, r, support=None, seed: int = 0,
                  max_retries: int = 32,
                  grid: FeasibilityGrid = FeasibilityGrid()) -> ReconstructedQ:
    """Solve the square moment system for the weights of a discrete Q.

    The system matrix has rows ``a_l^k / g(a_l)`` for k = 1..deg(g) with
    the zeroth row replaced by the sum-to-one constraint; the recovered
    weights reproduce the generalized moments exactly.  With no support
    given, the first candidate comes from a nonnegative grid fit of the
    moments; signed solutions then trigger retries on randomized support
    sets, and the least-negative solution is reported (flagged) when every
    attempt stays signed.
    """
    r = np.asarray(r, dtype=float)
    n = len(r)
    rng = np.random.default_rng(seed)

    def solve_at(a_support):
        a = np.asarray(a_support, dtype=float)
        if len(a) != n or len(np.unique(a)) != n or np.any(a <= 0):
            raise ValueError(f"support must be {n} distinct positive points")
        gv = rep.g(a)
        M = np.vander(a, n, increasing=True).T / gv
        M[0] = 1.0
        rhs = np.concatenate([[1.0], r[1:]])
        try:
            pi = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular moment system (coincident support?)") from exc
        return a, pi

    if support is not None:
        a, pi = solve_at(support)
        return ReconstructedQ(np.log(a), pi, bool(pi.min() >= NEG_WEIGHT_TOL),
                              retries=0)

    best = None
    for attempt in range(max_retries):
        try:
            if attempt == 0:
                a, pi = solve_at(_nnls_support_proposal(rep, r, grid))
            else:
                a, pi = solve_at(np.exp(np.sort(rng.uniform(-6.0, 6.0, size=n))))
        except ValueError:
            continue
        if best is None or pi.min() > best[1].min():
            best = (a, pi)
        if pi.min() >= NEG_WEIGHT_TOL:
            return ReconstructedQ(np.log(a), pi, True, retries=attempt)
    if best is None:
        raise ValueError("no usable support found")
    a, pi = best
    return ReconstructedQ(np.log(a), pi, False, retries=max_retries)


def feasibility_to_json(result: FeasibilityResult) -> str:
    """Serialize feasibility diagnostics (weights omitted for compactness)."""
    import json
    return json.dumps({
        "feasible": bool(result.feasible),
        "residual": result.residual,
        "cell_residuals": {f"x{xi},y0={y0}": v
                           for (xi, y0), v in sorted(result.cell_residuals.items())},
    }, sort_keys=True)

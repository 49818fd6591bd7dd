"""Point identification and sharp bounds for functionals of the latent
distribution.

A functional E_Q[psi(A)] is tractable when ``psi * g`` is a polynomial of
degree at most deg(g): its coefficient vector eta turns the functional into
the linear form ``eta' r`` in the generalized moments.  The catalogued
kinds construct eta by exact polynomial algebra on the linear factors of g,
and the admissibility conditions are precisely that the required factors
divide g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections import Counter

import numpy as np

from .dgp import PopulationProbs
from .idset import IdentifiedSet
from .inequalities import MomentVector, build_H, moment_vector
from .model import AR2, Representation, Theta, build_representation
from .poly import PolyA, poly_from_linear_factors

__all__ = [
    "FunctionalSpec",
    "EtaVector",
    "InadmissibleFunctionalError",
    "eta_vector",
    "functional_point_value",
    "functional_bounds",
]

KINDS = ("ame", "posterior_mean_a", "counterfactual_no_dynamics")


class InadmissibleFunctionalError(ValueError):
    """psi * g is not a polynomial of admissible degree for this model."""


@dataclass(frozen=True)
class FunctionalSpec:
    """Which functional to compute.

    ``ame``: average marginal effect of the lagged state; with covariates,
    ``x_tilde_period`` (a period index in 2..T) selects the next-period
    covariate value from the conditioning vector x.
    ``posterior_mean_a``: E[exp(alpha) | history], any history except all
    ones.  ``counterfactual_no_dynamics``: probability of a history with
    the lag coefficient switched off, requires y0 = 0.
    """

    kind: str
    x_tilde_period: int | None = None
    history: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.history is not None:
            object.__setattr__(self, "history", tuple(int(b) for b in self.history))


@dataclass(frozen=True)
class EtaVector:
    """Coefficients of psi * g, length deg(g) + 1."""

    eta: np.ndarray
    kind: str


def _factor_counter(rep: Representation) -> Counter:
    return Counter(dict(rep.g_factors))


def _mult(rep: Representation, key) -> float:
    u, v, xt = key
    m = rep.theta.B**u if u else 1.0
    if v:
        m *= rep.theta.B2**v
    if xt is not None:
        m *= rep.theta.shift(xt)
    return m


def _poly_of(rep: Representation, counter: Counter) -> PolyA:
    mults = []
    for key, count in sorted(counter.items()):
        mults.extend([_mult(rep, key)] * count)
    return poly_from_linear_factors(mults)


def _remove(counter: Counter, key, count, what: str) -> Counter:
    if counter[key] < count:
        raise InadmissibleFunctionalError(
            f"{what}: factor with multiplier exponents {key[:2]} at covariate "
            f"{key[2]} does not divide g"
        )
    out = counter.copy()
    out[key] -= count
    return +out


def eta_vector(fspec: FunctionalSpec, rep: Representation) -> EtaVector:
    """Coefficients of psi * g by polynomial multiplication of its factors."""
    if fspec.kind == "ame":
        return _eta_ame(fspec, rep)
    if fspec.kind == "posterior_mean_a":
        return _eta_posterior_mean(fspec, rep)
    return _eta_counterfactual(fspec, rep)


def _eta_ame(fspec: FunctionalSpec, rep: Representation) -> EtaVector:
    if rep.spec.family == AR2:
        raise InadmissibleFunctionalError(
            "ame is catalogued for the one-lag family only"
        )
    x = rep.x
    if x is None:
        x_tilde = None
    else:
        t = fspec.x_tilde_period
        if t is None or not (2 <= t <= rep.spec.T):
            raise InadmissibleFunctionalError(
                "ame with covariates requires x_tilde_period in 2..T "
                "(the next-period value must repeat an in-sample one)"
            )
        x_tilde = x[t - 1]
    g_fac = _factor_counter(rep)
    polys = []
    for k in (0, 1):
        key = (k, 0, x_tilde)
        rest = _remove(g_fac, key, 1, f"transition state {k}")
        polys.append(_poly_of(rep, rest).shift(1) * _mult(rep, key))
    eta = (polys[1] - polys[0]).padded(rep.d + 1)
    return EtaVector(eta=eta, kind=fspec.kind)


def _eta_posterior_mean(fspec: FunctionalSpec, rep: Representation) -> EtaVector:
    if fspec.history is None:
        raise InadmissibleFunctionalError("posterior_mean_a needs a conditioning history")
    j = rep.histories.index(fspec.history)
    row = PolyA(rep.G[j]).shift(1)
    if row.degree > rep.d:
        raise InadmissibleFunctionalError(
            "posterior mean of A is not a polynomial functional for the "
            "all-ones history"
        )
    return EtaVector(eta=row.padded(rep.d + 1), kind=fspec.kind)


def _eta_counterfactual(fspec: FunctionalSpec, rep: Representation) -> EtaVector:
    if fspec.history is None:
        raise InadmissibleFunctionalError("counterfactual_no_dynamics needs a history")
    if rep.y0 != 0:
        raise InadmissibleFunctionalError("counterfactual_no_dynamics requires y0 = 0")
    h = fspec.history
    if len(h) != rep.spec.T:
        raise ValueError("history length must equal the horizon")
    x = rep.x
    rest = _factor_counter(rep)
    const = 1.0
    for t in range(rep.spec.T):
        xt = None if x is None else x[t]
        rest = _remove(rest, (0, 0, xt), 1, "static denominator")
        if h[t] and xt is not None:
            const *= rep.theta.shift(xt)
    psi_g = (_poly_of(rep, rest) * const).shift(sum(h))
    if psi_g.degree > rep.d:
        raise InadmissibleFunctionalError(
            "counterfactual polynomial exceeds the admissible degree"
        )
    return EtaVector(eta=psi_g.padded(rep.d + 1), kind=fspec.kind)


def functional_point_value(fspec: FunctionalSpec, rep: Representation,
                           r: MomentVector) -> float:
    """eta' r; the posterior mean is additionally divided by the observed
    probability of its conditioning history (recovered as G r)."""
    eta = eta_vector(fspec, rep).eta
    value = float(eta @ r.r)
    if fspec.kind == "posterior_mean_a":
        j = rep.histories.index(fspec.history)
        pj = float(rep.G[j] @ r.r)
        if pj <= 0:
            raise ValueError("conditioning history has zero probability")
        value /= pj
    return value


def _value_at(fspec, probs, theta, x_index, y0):
    rep = build_representation(probs.spec, theta, x_index=x_index, y0=y0)
    H = build_H(rep)
    r = moment_vector(rep, H, probs.cell(x_index, y0))
    return functional_point_value(fspec, rep, r)


def functional_bounds(fspec: FunctionalSpec, probs: PopulationProbs,
                      idset: IdentifiedSet, x_index: int = 0,
                      y0: int | None = None, refine: int = 64) -> tuple[float, float]:
    """[inf, sup] of eta(theta)' r(theta) over the identified set.

    Point/finite sets evaluate at the members; intervals are sampled at the
    endpoints plus ``refine`` interior points; grid regions evaluate at
    every member cell.  eta' r is smooth in theta, so interval extremes are
    bracketed by the refinement.
    """
    spec = probs.spec
    y0 = spec.y0 if y0 is None else y0
    thetas = []
    if idset.kind in ("point", "finite"):
        thetas = list(idset.members)
    elif idset.kind == "interval":
        lo, hi = idset.beta_interval
        lo = math.log(1e-8) if math.isinf(lo) else lo
        grid = np.linspace(lo, hi, refine + 2)
        grid = grid[np.abs(grid) > 1e-9]   # B = 1 is the degenerate static model
        thetas = [Theta(b) for b in grid]
    elif idset.kind == "grid":
        thetas = [
            _theta_from_point(spec, z) for z in idset.grid.members
        ]
    else:
        raise ValueError(f"cannot bound over identified set of kind {idset.kind!r}")
    if not thetas:
        raise ValueError("identified set has no members to evaluate")
    values = [_value_at(fspec, probs, th, x_index, y0) for th in thetas]
    return float(min(values)), float(max(values))


def _theta_from_point(spec, z):
    if spec.family == AR2:
        return Theta((z[0], z[1]))
    if spec.covariates == "none":
        return Theta(z[0])
    return Theta(z[0], tuple(z[1:]))

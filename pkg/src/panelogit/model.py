"""Model specification and the polynomial representation of the likelihood.

For every supported model family the vector of choice-history likelihoods
factors as

    L(A) = G(theta, x) @ (1, A, ..., A^d)' / g(A, theta, x, y0),

where ``g`` is the minimal-degree polynomial clearing every history's
denominator and ``G`` collects the numerator coefficients.  ``g`` is
assembled as a product of linear factors ``(1 + m*A)``: for each period the
set of possible lag states determines the admissible multipliers ``m``, and
the multiplicity of each distinct factor in ``g`` is its maximal
multiplicity across histories.  This reproduces the closed forms for the
one-lag model (degree ``2T - 1``) and extends to two lags, arbitrary
initial conditions, and per-period covariate shifts.
"""

from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np

from .poly import PolyA, poly_from_linear_factors

__all__ = [
    "AR1",
    "AR2",
    "ModelSpec",
    "Theta",
    "Representation",
    "DegenerateModelWarning",
    "UnsupportedModelError",
    "enumerate_histories",
    "weight_ordered_histories",
    "reverse_ordered_histories",
    "order_permutation",
    "denominator_g",
    "build_representation",
    "likelihood_direct",
    "likelihood_vector",
]

AR1 = "ar1"
AR2 = "ar2"

_COVARIATE_KINDS = ("none", "series", "time_trend", "time_dummies")


class DegenerateModelWarning(UserWarning):
    """G is rank deficient at this theta (e.g. B = 1: static logit)."""


class UnsupportedModelError(ValueError):
    """Requested (family, horizon, initial condition) combination is not supported."""


def enumerate_histories(T: int) -> tuple[tuple[int, ...], ...]:
    """All 2**T choice histories in canonical order.

    Canonical order is ascending integer encoding with ``y_1`` as the most
    significant bit: index j encodes ``(y_1, ..., y_T)`` with
    ``j = y_1 * 2**(T-1) + ... + y_T``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    return tuple(
        tuple((j >> (T - 1 - t)) & 1 for t in range(T)) for j in range(2**T)
    )


def weight_ordered_histories(T: int) -> tuple[tuple[int, ...], ...]:
    """Histories sorted by (number of ones ascending, integer encoding
    descending) -- the display order used for most published matrices."""
    key = lambda h: (sum(h), -sum(b << (len(h) - 1 - i) for i, b in enumerate(h)))
    return tuple(sorted(enumerate_histories(T), key=key))


def reverse_ordered_histories(T: int) -> tuple[tuple[int, ...], ...]:
    """Histories in descending integer encoding ((1,...,1) first)."""
    return tuple(reversed(enumerate_histories(T)))


def order_permutation(T: int, ordered) -> np.ndarray:
    """Index array mapping canonical positions into a target display order.

    ``P_display = P_canonical[perm]`` where ``perm[i]`` is the canonical
    index of ``ordered[i]``.
    """
    canon = {h: i for i, h in enumerate(enumerate_histories(T))}
    return np.array([canon[tuple(h)] for h in ordered], dtype=int)


@dataclass(frozen=True)
class Theta:
    """Structural parameters: lag coefficients and covariate coefficients.

    ``beta`` has one entry for the one-lag family and two for the two-lag
    family; ``gamma`` is empty, a scalar, or (gamma, delta) for time
    dummies.  Scalars are accepted and normalized to tuples.
    """

    beta: tuple[float, ...]
    gamma: tuple[float, ...] = ()

    def __post_init__(self):
        b = (self.beta,) if np.isscalar(self.beta) else tuple(float(v) for v in self.beta)
        g = (self.gamma,) if np.isscalar(self.gamma) else tuple(float(v) for v in self.gamma)
        object.__setattr__(self, "beta", tuple(float(v) for v in b))
        object.__setattr__(self, "gamma", g)
        if len(self.beta) not in (1, 2):
            raise ValueError("beta must have one (AR1) or two (AR2) entries")

    @property
    def B(self) -> float:
        return float(np.exp(self.beta[0]))

    @property
    def B2(self) -> float:
        if len(self.beta) < 2:
            raise ValueError("second lag coefficient requested from a one-lag theta")
        return float(np.exp(self.beta[1]))

    def shift(self, x_t) -> float:
        """Per-period covariate multiplier exp(gamma' x_t)."""
        if x_t is None:
            return 1.0
        return float(np.exp(np.dot(self.gamma, x_t)))

    def as_dict(self) -> dict:
        return {"beta": list(self.beta), "gamma": list(self.gamma)}


def _normalize_x(x) -> tuple:
    """A covariate vector as a T-tuple of coefficient tuples."""
    out = []
    for xt in x:
        out.append(tuple(float(v) for v in (xt if isinstance(xt, (tuple, list)) else (xt,))))
    return tuple(out)


@dataclass(frozen=True)
class ModelSpec:
    """Model family, horizon, covariate pattern, and initial condition(s).

    ``support_x`` lists the covariate vectors x in the (finite) support;
    each is a length-T sequence of period values (scalars, or coefficient
    tuples for multi-dimensional gamma).  ``time_trend`` fixes the single
    support point x = (1, 2, ..., T); ``time_dummies`` enters as
    period-specific intercepts with the first period normalized to zero.
    """

    family: str = AR1
    T: int = 3
    covariates: str = "none"
    support_x: tuple = ()
    y0: int = 0
    y_minus1: int = 0

    def __post_init__(self):
        if self.family not in (AR1, AR2):
            raise UnsupportedModelError(f"unknown family {self.family!r}")
        if self.T < 2:
            raise ValueError("T must be >= 2")
        if self.covariates not in _COVARIATE_KINDS:
            raise ValueError(f"unknown covariate kind {self.covariates!r}")
        if self.y0 not in (0, 1) or self.y_minus1 not in (0, 1):
            raise ValueError("initial conditions must be 0/1 bits")
        if self.covariates == "time_trend":
            sx = (tuple((float(t),) for t in range(1, self.T + 1)),)
        elif self.covariates == "time_dummies":
            # x_t = (1{t==2}, ..., 1{t==T}); gamma_1 = 0 by normalization
            point = tuple(
                tuple(1.0 if t == k else 0.0 for k in range(2, self.T + 1))
                for t in range(1, self.T + 1)
            )
            sx = (point,)
        elif self.covariates == "none":
            sx = ()
        else:
            sx = tuple(_normalize_x(x) for x in self.support_x)
            if not sx:
                raise ValueError("covariates='series' requires a nonempty support_x")
            if any(len(x) != self.T for x in sx):
                raise ValueError("each support point must have one value per period")
        object.__setattr__(self, "support_x", sx)

    @property
    def n_hist(self) -> int:
        return 2**self.T

    @property
    def n_cells(self) -> int:
        return max(1, len(self.support_x))

    def x_values(self, x_index: int = 0):
        """Per-period covariate tuples for a support point, or None."""
        if self.covariates == "none":
            if x_index != 0:
                raise IndexError("model has no covariate support points")
            return None
        return self.support_x[x_index]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, doc: str) -> "ModelSpec":
        d = json.loads(doc)
        return cls(
            family=d.get("family", AR1),
            T=int(d["T"]),
            covariates=d.get("covariates", "none"),
            support_x=tuple(tuple(tuple(v) if isinstance(v, list) else v for v in x)
                            for x in d.get("support_x", ())),
            y0=int(d.get("y0", 0)),
            y_minus1=int(d.get("y_minus1", 0)),
        )


# --- structural skeleton -------------------------------------------------
#
# The factor structure of g and of each numerator row depends only on
# (family, T, y0, y_minus1, x), never on theta.  A factor key is
# (u, v, x_t): lag-one exponent, lag-two exponent, period covariate value.
# The skeleton caches, per history, the key multiset of its denominator and
# the numerator exponents, plus the maximal multiset defining g.


def _period_states(h, y0, ym1, two_lags):
    """Per-period (u, v) lag exponents for a history: u = y_{t-1}, v = y_{t-2}."""
    prev = (ym1, y0) + tuple(h)
    return [
        (prev[t], prev[t - 1] if two_lags else 0) for t in range(1, len(h) + 1)
    ]


@lru_cache(maxsize=None)
def _skeleton(spec: ModelSpec, x_index: int, y0: int, ym1: int):
    x = spec.x_values(x_index)
    T = spec.T
    two = spec.family == AR2
    hs = enumerate_histories(T)
    xt = [None] * T if x is None else list(x)

    hist_factors = []
    num_exp = []  # (sum y, sum y*y1lag, sum y*y2lag, sum_t x_t*y_t)
    g_factors: Counter = Counter()
    for h in hs:
        states = _period_states(h, y0, ym1, two)
        fac = Counter((u, v, xt[t]) for t, (u, v) in enumerate(states))
        hist_factors.append(fac)
        for k, c in fac.items():
            g_factors[k] = max(g_factors[k], c)
        e1 = sum(yt * u for yt, (u, _) in zip(h, states))
        e2 = sum(yt * v for yt, (_, v) in zip(h, states))
        xsum = None
        if x is not None:
            xsum = tuple(sum(yt * xi[j] for yt, xi in zip(h, x))
                         for j in range(len(x[0])))
        num_exp.append((sum(h), e1, e2, xsum))
    g_sorted = tuple(sorted(g_factors.items()))
    remaining = tuple(
        tuple(sorted((g_factors - fac).items())) for fac in hist_factors
    )
    return hs, g_sorted, remaining, tuple(num_exp)


def _multiplier(key, theta: Theta) -> float:
    u, v, xt = key
    m = theta.B**u if u else 1.0
    if v:
        m *= theta.B2**v
    if xt is not None:
        m *= theta.shift(xt)
    return m


def denominator_g(spec: ModelSpec, theta: Theta, x_index: int = 0,
                  y0: int | None = None) -> PolyA:
    """Minimal-degree denominator polynomial g(A, theta, x, y0).

    One lag, no covariates: ``(1+A*B)**(T-1+y0) * (1+A)**(T-y0)``; with a
    covariate the factors pick up ``C**x_t`` per period.  Two lags with
    T = 3 and (y_{-1}, y_0) = (0, 0), no covariates:
    ``(1+A)**3 (1+A*B1)(1+A*B2)(1+A*B1*B2)``.
    """
    _check_family(spec, theta)
    y0 = spec.y0 if y0 is None else y0
    _, g_fac, _, _ = _skeleton(spec, x_index, y0, spec.y_minus1)
    mults = []
    for key, count in g_fac:
        mults.extend([_multiplier(key, theta)] * count)
    return poly_from_linear_factors(mults)


def _check_family(spec: ModelSpec, theta: Theta):
    need = 2 if spec.family == AR2 else 1
    if len(theta.beta) != need:
        raise UnsupportedModelError(
            f"theta has {len(theta.beta)} lag coefficient(s); family {spec.family!r} needs {need}"
        )
    if spec.covariates != "none":
        dim = len(spec.x_values(0)[0])
        if len(theta.gamma) != dim:
            raise UnsupportedModelError(
                f"gamma has {len(theta.gamma)} entries; covariates need {dim}"
            )


@dataclass(frozen=True)
class Representation:
    """The matrix G, denominator g, and history ordering at a given theta.

    Row j of G holds the coefficients of ``L_j(A) * g(A)``; every entry is
    nonnegative and the rows sum to the coefficients of g.  ``rank`` is the
    numerical rank of G at tolerance ``1e-10 * sigma_max``.
    """

    spec: ModelSpec
    theta: Theta
    x_index: int
    y0: int
    histories: tuple[tuple[int, ...], ...]
    G: np.ndarray
    g: PolyA
    d: int
    rank: int
    rank_deficient: bool
    g_factors: tuple = field(repr=False, default=())

    @property
    def x(self):
        return self.spec.x_values(self.x_index)


def build_representation(spec: ModelSpec, theta: Theta, x_index: int = 0,
                         y0: int | None = None) -> Representation:
    """Assemble G and g at theta for one (x, y0) cell.

    Warns with :class:`DegenerateModelWarning` when G is not of full column
    rank (for one lag this happens at B = 1, the static logit, and when a
    covariate coefficient degenerates to C = 1 with coinciding periods).
    """
    _check_family(spec, theta)
    y0 = spec.y0 if y0 is None else y0
    hs, g_fac, remaining, num_exp = _skeleton(spec, x_index, y0, spec.y_minus1)

    mult = {key: _multiplier(key, theta) for key, _ in g_fac}
    g_mults = []
    for key, count in g_fac:
        g_mults.extend([mult[key]] * count)
    g = poly_from_linear_factors(g_mults)
    d = g.degree

    x = spec.x_values(x_index)
    G = np.zeros((len(hs), d + 1))
    for j, (rem, (ksum, e1, e2, xsum)) in enumerate(zip(remaining, num_exp)):
        const = theta.B**e1 if e1 else 1.0
        if e2:
            const *= theta.B2**e2
        if xsum is not None:
            const *= float(np.exp(np.dot(theta.gamma, xsum)))
        row = np.array([1.0])
        for key, count in rem:
            for _ in range(count):
                row = np.convolve(row, [1.0, mult[key]])
        G[j, ksum: ksum + len(row)] = const * row

    sv = np.linalg.svd(G, compute_uv=False)
    rank = int(np.sum(sv > sv[0] * 1e-10))
    deficient = rank < d + 1
    if deficient:
        warnings.warn(
            f"G is rank deficient (rank {rank} < {d + 1}) at theta={theta}; "
            "null-space and H construction will refuse without an override",
            DegenerateModelWarning,
            stacklevel=2,
        )
    return Representation(
        spec=spec, theta=theta, x_index=x_index, y0=y0, histories=hs,
        G=G, g=g, d=d, rank=rank, rank_deficient=deficient, g_factors=g_fac,
    )


def likelihood_direct(spec: ModelSpec, theta: Theta, history, A: float,
                      x_index: int = 0, y0: int | None = None) -> float:
    """Probability of one choice history by the period-product formula.

    Independent of the G/g representation; used as its oracle.
    """
    _check_family(spec, theta)
    y0 = spec.y0 if y0 is None else y0
    x = spec.x_values(x_index)
    h = tuple(int(b) for b in history)
    states = _period_states(h, y0, spec.y_minus1, spec.family == AR2)
    p = 1.0
    for t, (u, v) in enumerate(states):
        m = A * _multiplier((u, v, None if x is None else x[t]), theta)
        p *= m / (1.0 + m) if h[t] else 1.0 / (1.0 + m)
    return p


def likelihood_vector(spec: ModelSpec, theta: Theta, A: float,
                      x_index: int = 0, y0: int | None = None) -> np.ndarray:
    """All history probabilities at a point A, canonical order."""
    return np.array([
        likelihood_direct(spec, theta, h, A, x_index=x_index, y0=y0)
        for h in enumerate_histories(spec.T)
    ])

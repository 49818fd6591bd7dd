"""Assembly of the sharp identified set.

Three routes, matching how much structure the model gives: closed-form
interval bounds for the two-period model, membership filtering of the
finitely many equality roots, and grid scans over a box intersecting the
conditions across covariate support points and initial conditions.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._util import worker_count
from .dgp import PopulationProbs
from .equalities import RootSet
from .inequalities import theta_membership
from .model import AR2, ModelSpec, Theta, order_permutation, weight_ordered_histories

__all__ = [
    "GridRegion",
    "IdentifiedSet",
    "MisspecifiedModelError",
    "sharp_bounds_T2",
    "filter_roots",
    "grid_identify",
    "free_parameters",
]


class MisspecifiedModelError(RuntimeError):
    """No candidate passes the moment inequalities although P is exact."""


@dataclass(frozen=True)
class GridRegion:
    """Grid-scan result: points, membership mask, slack, binding labels."""

    param_names: tuple[str, ...]
    points: np.ndarray          # (N, k)
    member: np.ndarray          # (N,) bool
    slack: np.ndarray           # (N,) smallest Hankel margin across cells
    binding: tuple[str, ...]    # (N,) constraint with the smallest margin
    box: tuple
    step: float

    @property
    def members(self) -> np.ndarray:
        return self.points[self.member]

    def to_csv(self) -> str:
        head = ",".join(self.param_names) + ",member,min_slack,binding"
        lines = [head]
        for pt, m, s, b in zip(self.points, self.member, self.slack, self.binding):
            coords = ",".join(f"{v:.12g}" for v in pt)
            lines.append(f"{coords},{int(m)},{s:.12g},{b}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class IdentifiedSet:
    """Sharp identified set in one of four kinds.

    ``point``/``finite``: explicit members.  ``interval``: bounds for the
    single lag coefficient (two-period model), carried both on the B and
    the beta scale.  ``grid``: a :class:`GridRegion`.
    """

    kind: str
    param_names: tuple[str, ...]
    members: tuple[Theta, ...] = ()
    b_interval: tuple[float, float] | None = None
    beta_interval: tuple[float, float] | None = None
    grid: GridRegion | None = None
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"kind": self.kind, "param_names": list(self.param_names),
               "provenance": self.provenance}
        if self.members:
            out["members"] = [t.as_dict() for t in self.members]
        if self.b_interval is not None:
            out["b_interval"] = list(self.b_interval)
            out["beta_interval"] = list(self.beta_interval)
        return out


def sharp_bounds_T2(P) -> IdentifiedSet:
    """Closed-form sharp bounds for exp(beta) in the two-period model
    without covariates (y0 = 0).

    ``P`` holds the four history probabilities in canonical order.  The
    sign of beta is identified by sign(p2 - p1) in the display order
    {(0,0), (1,0), (0,1), (1,1)}; the interval endpoints are the quadratic
    roots of the two binding Hankel minors.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (4,):
        raise ValueError("expected four history probabilities")
    if np.any(P <= 0):
        raise ValueError("all probabilities must be strictly positive")
    perm = order_permutation(2, weight_ordered_histories(2))
    p0, p1, p2, p3 = P[perm]
    if p1 == p2:
        raise ValueError("p1 == p2: beta = 0 boundary case is not identified here")

    q0 = p1 * p1 - p1 * p2 + p1 * p3 + p2 * p3
    q1 = p0 * p2 - p0 * p1 + p1 * p2 + p2 * p2
    disc0 = q0 * q0 - 4 * p1 * p2 * p3 * (p1 - p2 + p3)
    disc1 = q1 * q1 + 4 * p1 * p2 * (p0 * p1 - p0 * p2 - p2 * p2)
    root0_hi = (q0 + math.sqrt(disc0)) / (2 * p1 * (p1 - p2 + p3))
    root0_lo = (q0 - math.sqrt(disc0)) / (2 * p1 * (p1 - p2 + p3))
    root1_hi = (q1 + math.sqrt(disc1)) / (2 * p1 * p2)
    root1_lo = (q1 - math.sqrt(disc1)) / (2 * p1 * p2)

    if p2 > p1:   # beta > 0
        b_lo, b_hi = root0_hi, root1_hi
        sign = 1
    else:         # beta < 0
        b_lo, b_hi = max(0.0, root1_lo), root0_lo
        sign = -1
    beta_lo = -math.inf if b_lo == 0.0 else math.log(b_lo)
    beta_hi = math.log(b_hi)
    return IdentifiedSet(
        kind="interval", param_names=("beta",),
        b_interval=(b_lo, b_hi), beta_interval=(beta_lo, beta_hi),
        provenance={"sign_beta": sign,
                    "binding": ["r1*r3 - r2^2", "r0*r2 - r1^2"] if sign > 0
                    else ["r0*r2 - r1^2", "r1*r3 - r2^2"]},
    )


def filter_roots(roots: RootSet, probs: PopulationProbs,
                 eq_tol: float | None = None, slack: float = 0.0) -> IdentifiedSet:
    """Keep the equality roots that also satisfy the moment inequalities.

    Raises :class:`MisspecifiedModelError` when no root survives: with
    exact population input the identified set contains the truth, so an
    empty survivor set signals a wrong model.
    """
    spec = probs.spec
    survivors = []
    verdicts = []
    for root in roots.roots:
        th = root.theta(spec)
        res = theta_membership(th, probs, eq_tol=eq_tol, slack=slack)
        verdicts.append({"params": dict(root.params), "member": res.is_member,
                         "slack": res.slack})
        if res.is_member:
            survivors.append(th)
    if not survivors:
        raise MisspecifiedModelError(
            "no equality root satisfies the moment inequalities; "
            "with exact probabilities this indicates a misspecified model"
        )
    return IdentifiedSet(
        kind="point" if len(survivors) == 1 else "finite",
        param_names=roots.param_names,
        members=tuple(survivors),
        provenance={"verdicts": verdicts},
    )


def free_parameters(spec: ModelSpec) -> tuple[str, ...]:
    """Names of the free structural parameters for grid scans."""
    if spec.family == AR2:
        return ("beta1", "beta2")
    if spec.covariates == "none":
        return ("beta",)
    if spec.covariates == "time_dummies":
        return ("beta",) + tuple(f"gamma_{t}" for t in range(2, spec.T + 1))
    return ("beta", "gamma")


def _theta_from_vector(spec: ModelSpec, z) -> Theta:
    if spec.family == AR2:
        return Theta((z[0], z[1]))
    if spec.covariates == "none":
        return Theta(z[0])
    return Theta(z[0], tuple(z[1:]))


def _eval_grid_chunk(probs, points, eq_tol, slack):
    """Membership, smallest margin, and binding label per grid point."""
    spec = probs.spec
    out = []
    for z in points:
        th = _theta_from_vector(spec, z)
        res = theta_membership(th, probs, eq_tol=eq_tol, slack=slack)
        if res.degenerate:
            out.append((False, math.nan, "degenerate"))
            continue
        cell_slacks = []
        for (xi, y0), rep in sorted(res.reports.items()):
            cell_slacks.append((rep.min_eig_H, f"H[x{xi},y0={y0}]"))
            cell_slacks.append((rep.min_eig_B, f"B[x{xi},y0={y0}]"))
        s, label = min(cell_slacks)
        if res.eq_residual and not _eq_ok(res, eq_tol):
            label = "eq"
        out.append((res.is_member, s, label))
    return out


def grid_identify(probs: PopulationProbs, box, step: float,
                  eq_tol: float | None = None, slack: float = 0.0) -> IdentifiedSet:
    """Scan a box in parameter space and keep points passing every cell.

    The region is the intersection over covariate support points (and over
    initial conditions present in ``probs``).  Each grid point records its
    smallest Hankel margin and which constraint attains it, so the binding
    inequality along the boundary can be read off the output.  Setting
    PANEL_ID_THREADS > 1 distributes the scan over worker processes; the
    assembled result is schedule-independent.
    """
    spec = probs.spec
    names = free_parameters(spec)
    box = np.asarray(box, dtype=float)
    if box.shape != (len(names), 2):
        raise ValueError(f"box must have one (lo, hi) pair per parameter {names}")
    axes = [np.arange(lo, hi + step / 2, step) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])

    workers = worker_count()
    if workers > 1 and len(points) > 64:
        chunks = np.array_split(points, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                _eval_grid_chunk, [probs] * len(chunks), chunks,
                [eq_tol] * len(chunks), [slack] * len(chunks),
            ))
        rows = [row for part in parts for row in part]
    else:
        rows = _eval_grid_chunk(probs, points, eq_tol, slack)

    member = np.array([r[0] for r in rows], dtype=bool)
    slk = np.array([r[1] for r in rows])
    binding = tuple(r[2] for r in rows)
    region = GridRegion(
        param_names=names, points=points, member=member, slack=slk,
        binding=binding, box=tuple(map(tuple, box)), step=step,
    )
    return IdentifiedSet(kind="grid", param_names=names, grid=region,
                         provenance={"box": box.tolist(), "step": step})


def _eq_ok(res, eq_tol):
    tol = eq_tol if eq_tol is not None else 1e-8
    return res.eq_residual <= tol

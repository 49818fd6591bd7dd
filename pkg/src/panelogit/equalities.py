"""Moment equality conditions from the left null space of G.

The generic machinery (:func:`left_null_basis`, :func:`equality_residuals`)
works for any representation via the singular value decomposition.  Root
solving is catalogued per model family: the three-period systems reduce to
one or two signed equations in the free parameters, which are scanned on a
dense grid and polished by Newton steps with finite-difference Jacobians.
Underdetermined systems (time dummies with a single initial condition)
yield solution curves traced by marching squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from skimage.measure import find_contours

from .dgp import PopulationProbs
from .model import (
    AR1,
    AR2,
    ModelSpec,
    Representation,
    Theta,
    UnsupportedModelError,
    build_representation,
    enumerate_histories,
    order_permutation,
    reverse_ordered_histories,
    weight_ordered_histories,
)

__all__ = [
    "NullBasis",
    "Root",
    "RootSet",
    "RankDeficientError",
    "left_null_basis",
    "equality_residuals",
    "solve_closed_forms",
    "solve_numeric",
    "trace_solution_curves",
]

TRIVIAL_RADIUS = 1e-3   # ball around theta = 0 excluded from root reporting
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
NEWTON_FD_STEP = 1e-6


class RankDeficientError(ValueError):
    """G is rank deficient and the caller did not override."""


@dataclass(frozen=True)
class NullBasis:
    """Orthonormal basis of the left null space {v : v'G = 0}."""

    vectors: np.ndarray       # (dim, 2**T), rows orthonormal
    tol_rank: float
    rank: int

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


def left_null_basis(rep: Representation, tol_rank: float = 1e-10,
                    allow_degenerate: bool = False) -> NullBasis:
    """Left null space of G by SVD with a relative rank tolerance.

    The dimension equals ``2**T - (deg(g) + 1)`` whenever G has full column
    rank.  Raises :class:`RankDeficientError` on degenerate theta unless
    ``allow_degenerate`` is set.
    """
    if rep.rank_deficient and not allow_degenerate:
        raise RankDeficientError(
            f"G has rank {rep.rank} < {rep.d + 1} at theta={rep.theta}; "
            "pass allow_degenerate=True to proceed"
        )
    u, s, _ = np.linalg.svd(rep.G, full_matrices=True)
    cutoff = (s[0] if len(s) else 0.0) * tol_rank
    rank = int(np.sum(s > cutoff))
    return NullBasis(vectors=u[:, rank:].T.copy(), tol_rank=tol_rank, rank=rank)


def equality_residuals(theta: Theta, probs: PopulationProbs,
                       allow_degenerate: bool = False) -> np.ndarray:
    """Stacked v'P over the null basis of every supplied (x, y0) cell.

    Basis vectors are orthonormal but not canonical, so individual entries
    are basis-dependent; the norm of the vector is not (it is the length of
    the projection of P onto the left null space).
    """
    spec = probs.spec
    out = []
    for (xi, y0), p in probs.items():
        rep = build_representation(spec, theta, x_index=xi, y0=y0)
        basis = left_null_basis(rep, allow_degenerate=allow_degenerate)
        if basis.dim:
            out.append(basis.vectors @ p)
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class Root:
    """One solution of the moment equalities, named parameters plus residual."""

    params: dict[str, float]
    residual: float
    extras: dict = field(default_factory=dict)

    def theta(self, spec: ModelSpec) -> Theta:
        p = self.params
        if spec.family == AR2:
            if "beta2" not in p:
                raise ValueError("root does not pin the second lag coefficient")
            return Theta((p["beta1"], p["beta2"]))
        beta = p["beta"]
        if spec.covariates == "none":
            return Theta(beta)
        if spec.covariates == "time_dummies":
            return Theta(beta, (p["gamma"], p["delta"]))
        return Theta(beta, (p["gamma"],))

    def vector(self, names) -> np.ndarray:
        return np.array([self.params[n] for n in names])


@dataclass
class RootSet:
    """Roots (and solution curves, when underdetermined) of the equalities."""

    roots: list[Root]
    param_names: tuple[str, ...]
    curves: list[np.ndarray] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["kind," + ",".join(self.param_names) + ",residual"]
        for r in self.roots:
            vals = ",".join(f"{r.params.get(n, math.nan):.12g}" for n in self.param_names)
            lines.append(f"root,{vals},{r.residual:.12g}")
        for ci, curve in enumerate(self.curves):
            for pt in curve:
                vals = ",".join(f"{v:.12g}" for v in pt)
                lines.append(f"curve{ci},{vals},")
        return "\n".join(lines) + "\n"


# --- catalogued closed forms ---------------------------------------------

def _canon_index(T: int, history) -> int:
    return enumerate_histories(T).index(tuple(history))


def solve_closed_forms(probs: PopulationProbs) -> RootSet:
    """Closed-form equality solutions for the catalogued three-period cases.

    Catalogued: one lag without covariates, one lag with a scalar covariate
    satisfying x2 = x3 (both with y0 = 0), and the two-lag model's first
    lag coefficient.  Anything else falls through to :func:`solve_numeric`.
    """
    spec = probs.spec
    if spec.family == AR1 and spec.T == 3 and spec.covariates == "none":
        p = probs.cell(0, spec.y0)
        beta = math.log(p[_canon_index(3, (0, 1, 1))]) - math.log(p[_canon_index(3, (1, 0, 1))])
        root = Root({"beta": beta}, residual=_root_residual(probs, Theta(beta)))
        return RootSet([root], ("beta",), diagnostics={"method": "closed_form"})

    if (spec.family == AR1 and spec.T == 3 and spec.covariates == "series"
            and spec.y0 == 0 and _scalar_x(spec) is not None):
        x = _scalar_x(spec)
        if x[1] == x[2] and x[0] != x[1]:
            p = probs.cell(0, 0)
            i100, i010 = _canon_index(3, (1, 0, 0)), _canon_index(3, (0, 1, 0))
            i101, i011 = _canon_index(3, (1, 0, 1)), _canon_index(3, (0, 1, 1))
            beta = (math.log(p[i100]) - math.log(p[i010])
                    - math.log(p[i101]) + math.log(p[i011]))
            gamma = (math.log(p[i100]) - math.log(p[i010])) / (x[0] - x[1])
            th = Theta(beta, (gamma,))
            root = Root({"beta": beta, "gamma": gamma},
                        residual=_root_residual(probs, th))
            return RootSet([root], ("beta", "gamma"), diagnostics={"method": "closed_form"})

    if spec.family == AR2 and spec.T == 3 and spec.covariates == "none" \
            and spec.y0 == 0 and spec.y_minus1 == 0:
        p = probs.cell(0, 0)
        i100, i010 = _canon_index(3, (1, 0, 0)), _canon_index(3, (0, 1, 0))
        i101, i011 = _canon_index(3, (1, 0, 1)), _canon_index(3, (0, 1, 1))
        B1 = p[i011] / (p[i100] - p[i010] + p[i101])
        beta1 = math.log(B1)
        resid = abs(-B1 * p[i100] + B1 * p[i010] - B1 * p[i101] + p[i011])
        return RootSet([Root({"beta1": beta1}, residual=resid)], ("beta1",),
                       diagnostics={"method": "closed_form", "partial": True})

    return solve_numeric(probs)


def _scalar_x(spec: ModelSpec):
    """Per-period scalar covariate values of the single support point, if so shaped."""
    if len(spec.support_x) != 1:
        return None
    x = spec.support_x[0]
    if any(len(xt) != 1 for xt in x):
        return None
    return tuple(xt[0] for xt in x)


def _root_residual(probs: PopulationProbs, theta: Theta) -> float:
    r = equality_residuals(theta, probs)
    return float(np.max(np.abs(r))) if len(r) else 0.0


# --- catalogued numeric systems -------------------------------------------
#
# Each catalogue entry supplies the free parameter names and a callable
# evaluating the signed equality equations; the callables accept numpy
# arrays so the grid scan is vectorized.


def _t3_cov_equations(p, x):
    """Two signed equality equations for the three-period scalar-covariate
    model with y0 = 0 (time trend is the x = (1, 2, 3) special case).

    ``p`` is the probability vector ordered by (weight asc, encoding desc).
    Distinct second and third period values use the full basis; coinciding
    ones (x2 = x3) use the reduced pair.
    """
    x1, x2, x3 = x
    if x2 == x3:
        def eqs(beta, gamma):
            B, C = np.exp(beta), np.exp(gamma)
            f1 = -C ** (x2 - x1) * p[1] + p[2]
            f2 = -B * C ** (x2 - x1) * p[5] + p[6]
            return f1, f2
        return eqs

    def eqs(beta, gamma):
        B, C = np.exp(beta), np.exp(gamma)
        c1, c2, c3 = C ** x1, C ** x2, C ** x3
        f1 = (c3 * (B - 1) * p[1] + c1 * (1 - B * c3 / c2) * p[2]
              + c1 * (1 - c2 / c3) * p[3] + B * c3 * (1 - c3 / c2) * p[4]
              + B * (c3 - c2) * p[5])
        f2 = (c3 / c1 * (B * c2 - c3) * p[1] + c3 * (1 - B) * p[2]
              + (c3 - c2) * p[3] - B * c3 / c1 * (c3 - c2) * p[4]
              + (c3 - c2) * p[6])
        return f1, f2
    return eqs


def _time_dummy_reductions(q0=None, q1=None):
    """Curve equations and B-recovery for the time-dummy model.

    ``q0``/``q1`` are probability vectors for y0 = 0 / y0 = 1 ordered by
    descending encoding ((1,1,1) first).  The y0 = 0 pair reduces to a
    deterministic B(C, D) plus one polynomial curve in (C, D); likewise
    for y0 = 1.  Polynomial (denominator-cleared) forms keep the sign scan
    stable near C = D.
    """
    out = {}
    if q0 is not None:
        def b_from_y0(C, D):
            return (-D**2 * q0[3] + D * (q0[4] + q0[5]) + (D - C) * q0[6]) / (C * D * q0[2])

        def curve0(gamma, delta):
            C, D = np.exp(gamma), np.exp(delta)
            t1 = (-C * D + D**2) * q0[1] - C * D * (q0[2] + q0[3]) + D * q0[5]
            t2 = -D**2 * q0[3] + D * (q0[4] + q0[5]) + (D - C) * q0[6]
            return t1 * t2 + C**2 * D * q0[2] * q0[4]
        out["b_from_y0"] = b_from_y0
        out["curve0"] = curve0
    if q1 is not None:
        def b_from_y1(C, D):
            return ((C - D) * q1[1] + C * (q1[2] + q1[3]) - C * q1[4] / D) / q1[5]

        def curve1(gamma, delta):
            C, D = np.exp(gamma), np.exp(delta)
            t1 = C * D * q1[2] - D * (q1[4] + q1[5]) + (C - D) * q1[6]
            t2 = (C - D) * D * q1[1] + C * D * (q1[2] + q1[3]) - C * q1[4]
            return t1 * t2 + D**3 * q1[3] * q1[5]
        out["b_from_y1"] = b_from_y1
        out["curve1"] = curve1
    return out


def _newton(eqs, z0, box):
    """Newton with central finite differences; None when not converged."""
    z = np.asarray(z0, dtype=float)
    k = len(z)
    for _ in range(NEWTON_MAXITER):
        f = np.asarray(eqs(*z), dtype=float)
        if not np.all(np.isfinite(f)):
            return None
        if np.max(np.abs(f)) < NEWTON_TOL:
            return z
        J = np.zeros((len(f), k))
        for i in range(k):
            dz = np.zeros(k)
            dz[i] = NEWTON_FD_STEP
            J[:, i] = (np.asarray(eqs(*(z + dz))) - np.asarray(eqs(*(z - dz)))) / (2 * NEWTON_FD_STEP)
        try:
            step = np.linalg.lstsq(J, -f, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        z = z + step
        if np.any(z < box[:, 0] - 1.0) or np.any(z > box[:, 1] + 1.0):
            return None
    f = np.asarray(eqs(*z), dtype=float)
    return z if np.max(np.abs(f)) < 1e-9 else None


def _grid_axes(box, step):
    return [np.arange(lo, hi + step / 2, step) for lo, hi in box]


def _sign_change_cells(F):
    s = np.sign(F)
    a = s[:-1, :-1]
    return (a != s[1:, :-1]) | (a != s[:-1, 1:]) | (a != s[1:, 1:])


def _scan_2d(eqs, box, step):
    """Cells where every equation changes sign; returns cell-center starts."""
    ax0, ax1 = _grid_axes(box, step)
    Z0, Z1 = np.meshgrid(ax0, ax1, indexing="ij")
    vals = eqs(Z0, Z1)
    mask = np.ones((len(ax0) - 1, len(ax1) - 1), dtype=bool)
    for F in vals:
        mask &= _sign_change_cells(np.asarray(F))
    cells = np.argwhere(mask)
    return [(ax0[i] + step / 2, ax1[j] + step / 2) for i, j in cells]


def _scan_1d(eq, box, step):
    ax = _grid_axes(box, step)[0]
    F = np.asarray(eq(ax))
    s = np.sign(F)
    idx = np.nonzero(s[:-1] != s[1:])[0]
    return [(ax[i] + step / 2,) for i in idx]


def _dedupe(points, tol=1e-6):
    out = []
    for p in points:
        if not any(np.max(np.abs(np.asarray(p) - np.asarray(q))) < tol for q in out):
            out.append(p)
    return out


def solve_numeric(probs: PopulationProbs, box=None, step: float = 0.01,
                  trivial_radius: float = TRIVIAL_RADIUS) -> RootSet:
    """All isolated equality roots inside the search box.

    The box and grid live in parameter (log) space, default ``[-4, 4]``
    per free parameter.  Candidate cells where every catalogued equation
    changes sign seed Newton refinement; the trivial root at theta = 0 is
    excluded.  For the time-dummy model with only one initial condition the
    solution set is one-dimensional and is returned as polylines instead.
    """
    spec = probs.spec

    if spec.family == AR1 and spec.T == 3 and spec.covariates == "none":
        p = probs.cell(0, spec.y0)
        perm = order_permutation(3, weight_ordered_histories(3))
        pw = p[perm]
        eqs = lambda beta: (-np.exp(beta) * pw[5] + pw[6],)
        return _solve_system(probs, ("beta",), eqs, box, step,
                             trivial_radius, ndim=1,
                             extra_residual=lambda z: abs(pw[1] - pw[2]))

    if spec.family == AR2 and spec.T == 3 and spec.covariates == "none" \
            and spec.y0 == 0 and spec.y_minus1 == 0:
        p = probs.cell(0, 0)
        perm = order_permutation(3, weight_ordered_histories(3))
        pw = p[perm]
        eqs = lambda beta1: (np.exp(beta1) * (-pw[1] + pw[2] - pw[5]) + pw[6],)
        rs = _solve_system(probs, ("beta1",), eqs, box, step, trivial_radius, ndim=1)
        rs.diagnostics["partial"] = True
        return rs

    if spec.family == AR1 and spec.T == 3 and spec.y0 == 0 and (
            spec.covariates == "time_trend"
            or (spec.covariates == "series" and _scalar_x(spec) is not None)):
        x = (1.0, 2.0, 3.0) if spec.covariates == "time_trend" else _scalar_x(spec)
        perm = order_permutation(3, weight_ordered_histories(3))
        pw = probs.cell(0, 0)[perm]
        eqs = _t3_cov_equations(pw, x)
        return _solve_system(probs, ("beta", "gamma"), eqs, box, step, trivial_radius, ndim=2)

    if spec.covariates == "time_dummies" and spec.T == 3:
        return _solve_time_dummies(probs, box, step, trivial_radius)

    raise UnsupportedModelError(
        f"no catalogued equality system for {spec.family}/T={spec.T}/{spec.covariates}"
    )


def _solve_system(probs, names, eqs, box, step, trivial_radius, ndim,
                  extra_residual=None):
    box = np.array([[-4.0, 4.0]] * ndim if box is None else box, dtype=float)
    starts = _scan_1d(lambda a: eqs(a)[0], box, step) if ndim == 1 \
        else _scan_2d(eqs, box, step)
    roots = []
    for z0 in starts:
        z = _newton(eqs, z0, box)
        if z is None or np.linalg.norm(z) < trivial_radius:
            continue
        if np.any(z < box[:, 0] - step) or np.any(z > box[:, 1] + step):
            continue
        roots.append(tuple(z))
    roots = _dedupe(roots)
    out = []
    for z in sorted(roots):
        resid = float(np.max(np.abs(eqs(*z))))
        if extra_residual is not None:
            resid = max(resid, float(extra_residual(z)))
        out.append(Root(dict(zip(names, z)), residual=resid))
    rs = RootSet(out, tuple(names), diagnostics={"method": "grid+newton",
                                                 "box": box.tolist(), "step": step})
    if not out:
        rs.diagnostics["note"] = "no sign change found in box"
    return rs


def _solve_time_dummies(probs, box, step, trivial_radius):
    spec = probs.spec
    rev_perm = order_permutation(3, reverse_ordered_histories(3))
    q0 = probs.cells.get((0, 0))
    q1 = probs.cells.get((0, 1))
    red = _time_dummy_reductions(
        None if q0 is None else q0[rev_perm],
        None if q1 is None else q1[rev_perm],
    )
    box = np.array([[-4.0, 4.0]] * 2 if box is None else box, dtype=float)
    names = ("beta", "gamma", "delta")

    if q0 is not None and q1 is not None:
        eqs = lambda g, d: (red["curve0"](g, d), red["curve1"](g, d))
        starts = _scan_2d(eqs, box, step)
        sols = []
        for z0 in starts:
            z = _newton(eqs, z0, box)
            if z is None or np.linalg.norm(z) < trivial_radius:
                continue
            sols.append(tuple(z))
        roots = []
        for g, d in sorted(_dedupe(sols)):
            C, D = math.exp(g), math.exp(d)
            b = math.log(red["b_from_y0"](C, D))
            b_alt = math.log(red["b_from_y1"](C, D))
            roots.append(Root(
                {"beta": b, "gamma": g, "delta": d},
                residual=float(max(abs(red["curve0"](g, d)), abs(red["curve1"](g, d)))),
                extras={"beta_from_y1": b_alt},
            ))
        return RootSet(roots, names, diagnostics={"method": "grid+newton",
                                                  "box": box.tolist(), "step": step})

    # single initial condition: a one-dimensional solution curve in (C, D)
    curve = red["curve0"] if q0 is not None else red["curve1"]
    curves = trace_solution_curves(curve, box, step)
    return RootSet([], names, curves=curves,
                   diagnostics={"method": "marching_squares",
                                "free": ("gamma", "delta"),
                                "box": box.tolist(), "step": step})


def trace_solution_curves(fn, box, step: float) -> list[np.ndarray]:
    """Zero-level polylines of ``fn`` over the box (marching squares)."""
    box = np.asarray(box, dtype=float)
    ax0, ax1 = _grid_axes(box, step)
    Z0, Z1 = np.meshgrid(ax0, ax1, indexing="ij")
    F = np.asarray(fn(Z0, Z1), dtype=float)
    polylines = []
    for contour in find_contours(F, 0.0):
        pts = np.column_stack([
            np.interp(contour[:, 0], np.arange(len(ax0)), ax0),
            np.interp(contour[:, 1], np.arange(len(ax1)), ax1),
        ])
        polylines.append(pts)
    return polylines

"""Moment inequality conditions via truncated Stieltjes moment-space tests.

``r = H P`` with ``H G = I`` turns the observed probabilities into the
generalized moments of the latent measure; theta is admissible only when r
is a valid truncated Stieltjes moment sequence, checked through positive
semidefiniteness of two Hankel matrices plus a range condition in the
singular case.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .dgp import PopulationProbs
from .equalities import RankDeficientError, left_null_basis
from .model import DegenerateModelWarning, Representation, Theta, build_representation

__all__ = [
    "MomentVector",
    "MembershipReport",
    "ThetaMembership",
    "batch_membership_csv",
    "build_H",
    "moment_vector",
    "stieltjes_membership",
    "theta_membership",
]

PSD_TOL_SCALE = 1e-9          # eps_psd = scale * max(1, ||r||_inf)
SINGULAR_TOL_SCALE = 1e-7     # min eig below this * ||r||_inf triggers the range check
RANGE_TOL_SCALE = 1e-7        # eps_range = scale * ||shifted subvector||
EQ_TOL_SCALE = 1e-8           # default equality tolerance, * max(1, ||P||_inf)


@dataclass(frozen=True)
class MomentVector:
    """Generalized moments r(theta, x) = H P of the latent measure."""

    r: np.ndarray
    theta: Theta
    x: tuple | None
    y0: int


@dataclass(frozen=True)
class MembershipReport:
    """Diagnostics of one truncated-moment-space membership test."""

    is_member: bool
    min_eig_H: float
    min_eig_B: float
    range_residual: float
    singular_case: bool
    eps_psd: float
    eps_range: float

    @property
    def slack(self) -> float:
        """Smallest PSD margin; negative outside the moment space."""
        return min(self.min_eig_H, self.min_eig_B)

    def to_json(self) -> str:
        return json.dumps({
            "is_member": bool(self.is_member),
            "min_eig_H": self.min_eig_H,
            "min_eig_B": self.min_eig_B,
            "range_residual": self.range_residual,
            "singular_case": bool(self.singular_case),
            "eps_psd": self.eps_psd,
            "eps_range": self.eps_range,
        }, sort_keys=True)


def build_H(rep: Representation, rows=None, allow_degenerate: bool = False) -> np.ndarray:
    """A left inverse of G: ``H G = I``.

    Default is the Moore-Penrose pseudo-inverse.  Passing ``rows`` (a list
    of ``deg(g) + 1`` history indices whose G rows form a nonsingular
    square block) selects the LU-based construction instead, which
    reproduces published H matrices supported on those histories.
    """
    if rep.rank_deficient and not allow_degenerate:
        raise RankDeficientError(
            f"G has rank {rep.rank} < {rep.d + 1}; no left inverse exists"
        )
    n, m = rep.G.shape
    if rows is None:
        H = np.linalg.pinv(rep.G)
    else:
        rows = list(rows)
        if len(rows) != m:
            raise ValueError(f"row selection must pick {m} rows")
        sub = rep.G[rows, :]
        H = np.zeros((m, n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")   # scipy flags exact-singular LU
            try:
                block = lu_solve(lu_factor(sub), np.eye(m))
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise ValueError("selected rows form a singular block") from exc
        if not np.all(np.isfinite(block)):
            raise ValueError("selected rows form a singular block")
        H[:, rows] = block
    err = np.max(np.abs(H @ rep.G - np.eye(m)))
    if err > 1e-8:
        raise ValueError(f"left inverse failed: ||HG - I|| = {err:.2e}; "
                         "the selected rows are (nearly) dependent")
    return H


def moment_vector(rep: Representation, H: np.ndarray, P: np.ndarray) -> MomentVector:
    """r = H P; equals E_Q[A^k / g(A)] for model-consistent P."""
    P = np.asarray(P, dtype=float)
    if H.shape[1] != P.shape[0]:
        raise ValueError("H and P dimensions do not match")
    return MomentVector(r=H @ P, theta=rep.theta, x=rep.x, y0=rep.y0)


def _hankel(c, lo, k):
    return np.array([[c[lo + i + j] for j in range(k)] for i in range(k)])


def stieltjes_membership(r, slack: float = 0.0) -> MembershipReport:
    """Does r extend to the moments of a positive Borel measure on [0, inf)?

    For ``m = len(r) - 1`` odd (m = 2k+1) the tests are ``H_k >= 0``,
    ``B_k >= 0`` and, when H_k is singular, ``(c_{k+1},...,c_{2k+1})`` in
    the range of H_k; for even m = 2k they are ``H_k >= 0``,
    ``B_{k-1} >= 0`` with the range condition on B_{k-1}.  ``slack`` is an
    additional tolerance for noisy (estimated) inputs; the default 0 is
    exact-P mode.
    """
    c = np.asarray(r, dtype=float)
    m = len(c) - 1
    if m < 1:
        raise ValueError("need at least two moments")
    scale = float(np.max(np.abs(c)))
    eps_psd = PSD_TOL_SCALE * max(1.0, scale) + slack
    singular_tol = SINGULAR_TOL_SCALE * scale

    k = (m - 1) // 2 if m % 2 else m // 2
    Hk = _hankel(c, 0, k + 1)
    if m % 2:  # odd: B_k shifts by one, same size
        Bk = _hankel(c, 1, k + 1)
        range_mat, range_target = Hk, c[k + 1:]
    else:      # even: B_{k-1} is one smaller; range over B_{k-1}
        Bk = _hankel(c, 1, k)
        range_mat, range_target = Bk, c[k + 1:]

    eig_H = float(np.linalg.eigvalsh(Hk)[0])
    eig_B = float(np.linalg.eigvalsh(Bk)[0]) if Bk.size else 0.0

    member = eig_H >= -eps_psd and eig_B >= -eps_psd
    singular = float(np.linalg.eigvalsh(range_mat)[0]) < singular_tol if range_mat.size else False
    range_residual = 0.0
    eps_range = RANGE_TOL_SCALE * float(np.linalg.norm(range_target))
    if member and singular and range_mat.size:
        w, *_ = np.linalg.lstsq(range_mat, range_target, rcond=None)
        range_residual = float(np.linalg.norm(range_mat @ w - range_target))
        member = range_residual <= eps_range
    return MembershipReport(
        is_member=bool(member), min_eig_H=eig_H, min_eig_B=eig_B,
        range_residual=range_residual, singular_case=bool(singular),
        eps_psd=eps_psd, eps_range=eps_range,
    )


@dataclass(frozen=True)
class ThetaMembership:
    """Joint equality + inequality verdict with per-cell reports.

    ``degenerate`` marks thetas where G loses column rank (B = 1 and its
    relatives); the moment characterization assumes full rank there, and
    such points are reported as outside the set.
    """

    is_member: bool
    eq_residual: float
    reports: dict = field(default_factory=dict)   # (x_index, y0) -> MembershipReport
    degenerate: bool = False

    @property
    def slack(self) -> float:
        return min((rep.slack for rep in self.reports.values()), default=np.inf)


def theta_membership(theta: Theta, probs: PopulationProbs, eq_tol: float | None = None,
                     slack: float = 0.0) -> ThetaMembership:
    """Test theta against every supplied (x, y0) cell.

    Membership requires the equality residuals (projection of P on the left
    null space of G) to vanish within ``eq_tol`` and the generalized-moment
    vector of every cell to pass :func:`stieltjes_membership`.
    """
    spec = probs.spec
    eq_max = 0.0
    reports = {}
    member = True
    for (xi, y0), p in probs.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            rep = build_representation(spec, theta, x_index=xi, y0=y0)
        if rep.rank_deficient:
            return ThetaMembership(is_member=False, eq_residual=float("nan"),
                                   reports={}, degenerate=True)
        if eq_tol is None:
            eq_tol_cell = EQ_TOL_SCALE * max(1.0, float(np.max(np.abs(p))))
        else:
            eq_tol_cell = eq_tol
        if rep.G.shape[0] > rep.G.shape[1]:
            basis = left_null_basis(rep)
            resid = float(np.max(np.abs(basis.vectors @ p)))
            eq_max = max(eq_max, resid)
            if resid > eq_tol_cell:
                member = False
        H = build_H(rep)
        report = stieltjes_membership(H @ p, slack=slack)
        reports[(xi, y0)] = report
        member = member and report.is_member
    return ThetaMembership(is_member=member, eq_residual=eq_max, reports=reports)


def batch_membership_csv(probs: PopulationProbs, thetas, param_names,
                         eq_tol: float | None = None, slack: float = 0.0) -> str:
    """CSV rows (theta, member, min_eig_H, min_eig_B) over a theta batch.

    The eigenvalue columns report the smallest margin across the supplied
    (x, y0) cells; degenerate thetas carry empty eigenvalue fields.
    """
    head = ",".join(param_names) + ",member,min_eig_H,min_eig_B"
    lines = [head]
    for theta in thetas:
        coords = list(theta.beta) + list(theta.gamma)
        res = theta_membership(theta, probs, eq_tol=eq_tol, slack=slack)
        prefix = ",".join(f"{v:.12g}" for v in coords)
        if res.degenerate:
            lines.append(f"{prefix},0,,")
            continue
        eh = min(rep.min_eig_H for rep in res.reports.values())
        eb = min(rep.min_eig_B for rep in res.reports.values())
        lines.append(f"{prefix},{int(res.is_member)},{eh:.12g},{eb:.12g}")
    return "\n".join(lines) + "\n"

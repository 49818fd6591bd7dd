import numpy as np
import pytest

from panelogit import (
    ModelSpec,
    Theta,
    build_H,
    build_representation,
    moment_vector,
    order_permutation,
    population_probs,
    reverse_ordered_histories,
    solve_numeric,
    stieltjes_membership,
    theta_membership,
    weight_ordered_histories,
)

import reference_values as pv
from conftest import EQUAL_MASS


# --- H construction ----------------------------------------------------------

def test_H_T2_matches_published_inverse(t2_setup):
    spec, theta0, _ = t2_setup
    rep = build_representation(spec, theta0)
    H = build_H(rep)
    perm = order_permutation(2, weight_ordered_histories(2))
    H_display = H[:, perm]    # published H acts on the weight-ordered P
    assert np.max(np.abs(H_display - pv.h2_inverse(theta0.B))) < 1e-12


def test_H_left_inverse_property():
    rng = np.random.default_rng(2)
    specs = [
        (ModelSpec(family="ar1", T=3, covariates="none"), Theta(0.5)),
        (ModelSpec(family="ar1", T=4, covariates="none"), Theta(-0.7)),
        (ModelSpec(family="ar2", T=3, covariates="none"), Theta((0.5, 0.3))),
    ]
    for spec, theta in specs:
        rep = build_representation(spec, theta)
        H = build_H(rep)
        assert np.max(np.abs(H @ rep.G - np.eye(rep.d + 1))) < 1e-10


def test_published_H3_and_time_dummy_H_are_left_inverses():
    B = np.exp(0.5)
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    rep = build_representation(spec, Theta(0.5))
    perm = order_permutation(3, weight_ordered_histories(3))
    G_disp = rep.G[perm]
    assert np.max(np.abs(pv.h3_no_covariate(B) @ G_disp - np.eye(6))) < 1e-12

    C, D = np.exp(0.8), np.exp(0.3)
    spec_td = ModelSpec(family="ar1", T=3, covariates="time_dummies")
    perm_r = order_permutation(3, reverse_ordered_histories(3))
    for y0 in (0, 1):
        rep_td = build_representation(spec_td, Theta(0.5, (0.8, 0.3)), y0=y0)
        G_disp = rep_td.G[perm_r]
        H_pub = pv.h_time_dummies(B, C, D, y0)
        assert np.max(np.abs(H_pub @ G_disp - np.eye(6))) < 1e-10


def test_H_row_selection_gives_same_r(t3_setup):
    # multiple valid left inverses produce identical generalized moments on
    # model-consistent probabilities.  Rows (1,0,0)/(0,1,0) and
    # (1,0,1)/(0,1,1) are pairwise dependent here, so pick one of each.
    spec, theta0, probs = t3_setup
    rep = build_representation(spec, theta0)
    H_pinv = build_H(rep)
    rows = [0, 1, 2, 3, 6, 7]
    H_sel = build_H(rep, rows=rows)
    assert np.max(np.abs(H_sel @ rep.G - np.eye(rep.d + 1))) < 1e-10
    p = probs.cell()
    assert np.max(np.abs(H_pinv @ p - H_sel @ p)) < 1e-9
    assert np.max(np.abs(H_sel[:, [4, 5]])) == 0.0   # supported on chosen rows


def test_H_row_selection_validation(t3_setup):
    spec, theta0, _ = t3_setup
    rep = build_representation(spec, theta0)
    with pytest.raises(ValueError):
        build_H(rep, rows=[0, 1, 2])
    with pytest.raises(ValueError):
        build_H(rep, rows=[0, 1, 2, 2, 6, 7])   # duplicated row: singular
    with pytest.raises(ValueError):
        build_H(rep, rows=[0, 1, 2, 4, 6, 7])   # (1,0,0) repeats (0,1,0)


# --- moment vectors -----------------------------------------------------------

def test_point_mass_moments(t2_setup):
    spec, theta0, _ = t2_setup
    rep = build_representation(spec, theta0)
    from panelogit import likelihood_vector
    P = likelihood_vector(spec, theta0, 1.0)     # degenerate Q at alpha = 0
    r = moment_vector(rep, build_H(rep), P)
    assert np.allclose(r.r, 1.0 / rep.g(1.0), atol=1e-12)


def test_moment_vector_dimension_check(t2_setup):
    spec, theta0, _ = t2_setup
    rep = build_representation(spec, theta0)
    with pytest.raises(ValueError):
        moment_vector(rep, build_H(rep), np.ones(5))


def test_time_trend_r_diagnostics(time_trend_setup):
    # the leading generalized moment (mass of the transformed measure) is
    # about 0.01 at the truth and -0.24 at the false root
    spec, theta0, probs = time_trend_setup
    rep = build_representation(spec, theta0)
    r0 = moment_vector(rep, build_H(rep), probs.cell()).r
    assert abs(r0[0] - 0.01) < 0.02
    roots = solve_numeric(probs)
    false = max(roots.roots, key=lambda r: r.params["beta"])
    rep_f = build_representation(spec, false.theta(spec))
    r_f = moment_vector(rep_f, build_H(rep_f), probs.cell()).r
    assert abs(r_f[0] - (-0.24)) < 0.02


def test_time_dummy_false_root_r1(time_dummy_setup):
    # first moments at the combined-system false root are decisively
    # negative for both initial conditions (H-invariant values -0.181/-0.136)
    spec, theta0, probs = time_dummy_setup
    roots = solve_numeric(probs)
    false = max(roots.roots, key=lambda r: r.params["delta"])
    th = false.theta(spec)
    r1 = {}
    for y0 in (0, 1):
        rep = build_representation(spec, th, y0=y0)
        r1[y0] = moment_vector(rep, build_H(rep), probs.cell(0, y0)).r[1]
    assert abs(r1[0] - (-0.179)) < 5e-3
    assert r1[1] < -0.1
    # H-invariance at the root (the equalities hold there, so P is in the
    # column space of G and every left inverse gives the same r)
    rep0 = build_representation(spec, th, y0=0)
    H_sel = build_H(rep0, rows=[0, 1, 2, 3, 4, 7])
    r_sel = H_sel @ probs.cell(0, 0)
    assert abs(r_sel[1] - r1[0]) < 1e-6


# --- Stieltjes membership -------------------------------------------------------

def test_point_mass_sequence_is_member():
    rep = stieltjes_membership([1.0, 2.0, 4.0, 8.0])
    assert rep.is_member
    assert rep.singular_case
    assert rep.range_residual < 1e-12


def test_broken_range_condition_fails():
    rep = stieltjes_membership([1.0, 2.0, 4.0, 9.0])
    assert not rep.is_member
    assert rep.singular_case
    assert rep.range_residual > 0.1


def test_uniform_three_atoms_member():
    atoms = np.array([1.0, 2.0, 3.0])
    c = [np.mean(atoms**k) for k in range(6)]
    assert stieltjes_membership(c).is_member


def test_negative_mass_fails():
    c = [1.0, -0.5, 4.0, 8.0]
    assert not stieltjes_membership(c).is_member


def test_even_case_membership():
    atoms = np.array([0.5, 1.5, 4.0])
    w = np.array([0.2, 0.5, 0.3])
    c = [float(w @ atoms**k) for k in range(7)]   # m = 6, even
    assert stieltjes_membership(c).is_member
    c[6] -= 1.0
    assert not stieltjes_membership(c).is_member


def test_random_measures_member_and_perturbation():
    # membership is invariant to rescaling the support (a diagonal congruence
    # of both Hankel matrices), so the perturbation margin is probed on the
    # rescaled sequence where the moments are well conditioned
    rng = np.random.default_rng(123)
    informative = 0
    for _ in range(100):
        n = rng.integers(3, 7)
        atoms = np.sort(rng.uniform(0.01, 50.0, size=n))
        w = rng.uniform(0.1, 1.0, size=n)
        c = np.array([float(w @ atoms**k) for k in range(6)])
        assert stieltjes_membership(c).is_member

        scaled = np.array([float(w @ (atoms / atoms[-1])**k) for k in range(6)])
        assert stieltjes_membership(scaled).is_member
        # the top moment may fall by at most 1 / (B2^{-1})_{33} before the
        # shifted Hankel matrix loses positive semidefiniteness; skip draws
        # whose margin sits at the PSD tolerance floor (near-coincident atoms)
        B2 = np.array([[scaled[i + j + 1] for j in range(3)] for i in range(3)])
        margin = 1.0 / np.linalg.inv(B2)[2, 2]
        if margin < 100 * 1e-9:
            continue
        informative += 1
        inside = scaled.copy()
        inside[5] -= 0.9 * margin
        outside = scaled.copy()
        outside[5] -= 1.1 * margin
        assert stieltjes_membership(inside).is_member
        assert not stieltjes_membership(outside).is_member
    assert informative >= 95


def test_dual_cone_consistency():
    # members of the order-3 moment space pair nonnegatively with every
    # polynomial A f(A)^2 + q(A)^2 of degree <= 3
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = rng.integers(1, 5)
        atoms = rng.uniform(0.01, 50.0, size=n)
        w = rng.uniform(0.1, 1.0, size=n)
        r = np.array([float(w @ atoms**k) for k in range(4)])
        for _ in range(100):
            xi0, xi1, lam0, lam1 = rng.normal(size=4)
            eta = np.array([
                lam0**2,
                xi0**2 + 2 * lam0 * lam1,
                2 * xi0 * xi1 + lam1**2,
                xi1**2,
            ])
            assert eta @ r >= -1e-10


def test_membership_slack_parameter():
    # two atoms {1, 3}, equal mass: c = (1, 2, 5, 14); the top moment may
    # fall by 1.5 before B_1 = [[2, 5], [5, 14]] loses PSD.  Slightly past
    # that boundary the exact test rejects but a noise allowance accepts.
    c = [1.0, 2.0, 5.0, 14.0 - 1.5 - 1e-4]
    assert not stieltjes_membership(c).is_member
    assert stieltjes_membership(c, slack=1e-3).is_member


# --- joint theta membership -----------------------------------------------------

def test_truth_is_member(t3_setup, time_trend_setup, time_dummy_setup, ar2_setup):
    for spec, theta0, probs in (t3_setup, time_trend_setup, time_dummy_setup, ar2_setup):
        res = theta_membership(theta0, probs)
        assert res.is_member
        assert res.eq_residual < 1e-10


def test_time_trend_false_root_rejected(time_trend_setup):
    spec, theta0, probs = time_trend_setup
    roots = solve_numeric(probs)
    false = max(roots.roots, key=lambda r: r.params["beta"])
    res = theta_membership(false.theta(spec), probs)
    assert not res.is_member
    # rejected by the sign of the leading moment, i.e. a negative Hankel margin
    assert res.slack < -0.1
    assert res.eq_residual < 1e-10        # it does satisfy the equalities


def test_time_dummy_false_root_rejected(time_dummy_setup):
    spec, theta0, probs = time_dummy_setup
    roots = solve_numeric(probs)
    false = max(roots.roots, key=lambda r: r.params["delta"])
    res = theta_membership(false.theta(spec), probs, eq_tol=1e-4)
    assert not res.is_member


def test_degenerate_theta_flagged(t3_setup):
    spec, theta0, probs = t3_setup
    res = theta_membership(Theta(0.0), probs)
    assert res.degenerate and not res.is_member


def test_report_serialization(t3_setup):
    spec, theta0, probs = t3_setup
    res = theta_membership(theta0, probs)
    doc = res.reports[(0, 0)].to_json()
    assert '"is_member": true' in doc


def test_batch_membership_csv(t2_covariate_setup):
    from panelogit import batch_membership_csv
    spec, theta0, probs = t2_covariate_setup
    thetas = [Theta(b, (0.8,)) for b in (0.0, 0.4, 0.5)]
    csv = batch_membership_csv(probs, thetas, ("beta", "gamma"))
    lines = csv.splitlines()
    assert lines[0] == "beta,gamma,member,min_eig_H,min_eig_B"
    assert lines[1].endswith(",0,,")       # degenerate theta: empty eigenvalues
    assert lines[3].split(",")[2] == "1"   # the truth is a member

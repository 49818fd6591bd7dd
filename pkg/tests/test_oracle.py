import math

import numpy as np
import pytest

from panelogit import (
    DiscreteMixture,
    FeasibilityGrid,
    ModelSpec,
    Theta,
    build_H,
    build_representation,
    feasibility_check,
    moment_vector,
    population_probs,
    reconstruct_Q,
    sharp_bounds_T2,
    solve_numeric,
)

from conftest import EQUAL_MASS


def test_truth_feasible_with_grid_atoms(t3_setup, time_trend_setup):
    # the DGP atoms (-2 and 1) lie on the default grid, so the fit is exact
    for spec, theta0, probs in (t3_setup, time_trend_setup):
        res = feasibility_check(theta0, probs)
        assert res.feasible
        assert res.residual < 1e-10


def test_false_root_infeasible(time_trend_setup):
    spec, theta0, probs = time_trend_setup
    roots = solve_numeric(probs)
    false = max(roots.roots, key=lambda r: r.params["beta"])
    res = feasibility_check(false.theta(spec), probs)
    assert not res.feasible
    assert res.residual > 1e-3


def test_feasibility_boundary_matches_closed_form(t2_setup):
    # the feasibility transition in B sits within one scan step of the
    # closed-form interval endpoints
    spec, theta0, probs = t2_setup
    ids = sharp_bounds_T2(probs.cell())
    lo, hi = ids.b_interval
    step = 1e-3
    grid = np.arange(1.2, 2.2, step)
    feas = np.array([
        feasibility_check(Theta(math.log(b)), probs).feasible for b in grid
    ])
    f_lo, f_hi = grid[feas][0], grid[feas][-1]
    assert abs(f_lo - lo) <= 2 * step
    assert abs(f_hi - hi) <= 2 * step


def test_reconstruct_recovers_atoms(t2_setup):
    spec, theta0, probs = t2_setup
    rep = build_representation(spec, theta0)
    r = moment_vector(rep, build_H(rep), probs.cell()).r
    support = np.exp([-2.0, 0.0, 1.0, 2.0])
    rec = reconstruct_Q(rep, r, support=support)
    assert rec.nonnegative
    w = rec.weights
    assert abs(w[0] - 0.5) < 1e-8 and abs(w[2] - 0.5) < 1e-8
    assert abs(w[1]) < 1e-8 and abs(w[3]) < 1e-8


def test_reconstruct_roundtrip_reproduces_P(t3_setup):
    spec, theta0, probs = t3_setup
    rep = build_representation(spec, theta0)
    r = moment_vector(rep, build_H(rep), probs.cell()).r
    rec = reconstruct_Q(rep, r, seed=1)
    assert rec.nonnegative
    mix_cells = sorted(zip(rec.alphas, rec.weights))
    keep = [(a, w) for a, w in mix_cells if w > 1e-12]
    alphas, w = zip(*keep)
    mix = DiscreteMixture(tuple(alphas), tuple(np.array(w) / sum(w)))
    again = population_probs(spec, theta0, mix)
    assert np.max(np.abs(again.cell() - probs.cell())) < 1e-8


def test_reconstruct_point_mass(t2_setup):
    spec, theta0, _ = t2_setup
    rep = build_representation(spec, theta0)
    a0 = 1.7
    r = np.array([a0**k for k in range(4)]) / rep.g(a0)
    rec = reconstruct_Q(rep, r, support=[0.5, 1.0, a0, 3.0])
    assert rec.nonnegative
    assert abs(rec.weights[2] - 1.0) < 1e-8
    assert np.max(np.abs(np.delete(rec.weights, 2))) < 1e-8


def test_reconstruct_observational_equivalence():
    # two nonnegative reconstructions of the same (interior) moment vector
    # are different distributions generating identical choice probabilities
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    theta0 = Theta(0.5)
    rich = DiscreteMixture((-3.0, -1.5, -0.5, 0.3, 1.0, 1.8, 2.5),
                           (0.2, 0.15, 0.15, 0.2, 0.1, 0.1, 0.1))
    probs = population_probs(spec, theta0, rich)
    rep = build_representation(spec, theta0)
    r = moment_vector(rep, build_H(rep), probs.cell()).r
    rec1 = reconstruct_Q(rep, r)
    rec2 = reconstruct_Q(rep, r, grid=FeasibilityGrid(-8.13, 8.13, 401))
    assert rec1.nonnegative and rec2.nonnegative
    assert not np.allclose(np.sort(rec1.alphas), np.sort(rec2.alphas), atol=1e-6)
    ps = []
    for rec in (rec1, rec2):
        keep = [(a, w) for a, w in zip(rec.alphas, rec.weights) if w > 1e-12]
        alphas, w = zip(*sorted(keep))
        mix = DiscreteMixture(tuple(alphas), tuple(np.array(w) / sum(w)))
        ps.append(population_probs(spec, theta0, mix).cell())
    assert np.max(np.abs(ps[0] - ps[1])) < 1e-8


def test_reconstruct_rejects_bad_support(t2_setup):
    spec, theta0, probs = t2_setup
    rep = build_representation(spec, theta0)
    r = moment_vector(rep, build_H(rep), probs.cell()).r
    with pytest.raises(ValueError):
        reconstruct_Q(rep, r, support=[1.0, 1.0, 2.0, 3.0])   # coincident
    with pytest.raises(ValueError):
        reconstruct_Q(rep, r, support=[1.0, 2.0, 3.0])        # wrong count


def test_feasibility_custom_grid(t2_setup):
    spec, theta0, probs = t2_setup
    res = feasibility_check(theta0, probs, FeasibilityGrid(n=201, tol_feas=1e-5))
    assert res.feasible
    assert set(res.cell_residuals) == {(0, 0)}


def test_feasibility_json(t2_setup):
    import json
    from panelogit.oracle import feasibility_to_json
    spec, theta0, probs = t2_setup
    doc = json.loads(feasibility_to_json(feasibility_check(theta0, probs)))
    assert doc["feasible"] is True
    assert "x0,y0=0" in doc["cell_residuals"]

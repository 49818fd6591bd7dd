import json
import warnings

import numpy as np
import pytest

from panelogit import (
    DegenerateModelWarning,
    ModelSpec,
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

import reference_values as pv


# --- histories and orderings ---------------------------------------------

def test_histories_T1():
    assert enumerate_histories(1) == ((0,), (1,))


def test_histories_T2_orders():
    assert enumerate_histories(2) == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert weight_ordered_histories(2) == ((0, 0), (1, 0), (0, 1), (1, 1))


def test_histories_T3_weight_order():
    assert weight_ordered_histories(3) == (
        (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1),
    )


def test_reverse_order():
    assert reverse_ordered_histories(3)[0] == (1, 1, 1)
    assert reverse_ordered_histories(3)[-1] == (0, 0, 0)


def test_order_permutation_roundtrip():
    perm = order_permutation(3, weight_ordered_histories(3))
    hs = enumerate_histories(3)
    assert tuple(hs[i] for i in perm) == weight_ordered_histories(3)


# --- denominator g ---------------------------------------------------------

def test_g_T2_example():
    spec = ModelSpec(family="ar1", T=2, covariates="none")
    g = denominator_g(spec, Theta(np.log(2.0)))
    assert np.allclose(g.coeffs, [1, 4, 5, 2])   # (1+A)^2 (1+2A)


def test_g_beta_zero_binomial():
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        g = denominator_g(spec, Theta(0.0))
    assert np.allclose(g.coeffs, [1, 5, 10, 10, 5, 1])   # (1+A)^5


def test_g_ar2_all_lags_off():
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    g = denominator_g(spec, Theta((0.0, 0.0)))
    assert np.allclose(g.coeffs, [1, 6, 15, 20, 15, 6, 1])   # (1+A)^6


def test_g_degrees():
    for T in (2, 3, 4):
        spec = ModelSpec(family="ar1", T=T, covariates="none")
        for y0 in (0, 1):
            g = denominator_g(spec, Theta(0.4), y0=y0)
            assert g.degree == 2 * T - 1
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    assert denominator_g(spec, Theta((0.4, -0.2))).degree == 6
    spec = ModelSpec(family="ar2", T=3, covariates="series",
                     support_x=((0.5, 1.0, -0.5),))
    assert denominator_g(spec, Theta((0.4, -0.2), (0.3,))).degree == 7


def test_g_closed_form_ar1():
    # (1+AB)^(T-1+y0) (1+A)^(T-y0)
    B = np.exp(0.7)
    for T in (2, 3):
        for y0 in (0, 1):
            spec = ModelSpec(family="ar1", T=T, covariates="none", y0=y0)
            g = denominator_g(spec, Theta(0.7))
            expect = np.array([1.0])
            for _ in range(T - 1 + y0):
                expect = np.convolve(expect, [1, B])
            for _ in range(T - y0):
                expect = np.convolve(expect, [1, 1])
            assert np.allclose(g.coeffs, expect, rtol=1e-12)


def test_g_ar2_reference_form():
    B1, B2 = np.exp(0.5), np.exp(0.3)
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    g = denominator_g(spec, Theta((0.5, 0.3)))
    expect = np.array([1.0])
    for m in (1, 1, 1, B1, B2, B1 * B2):
        expect = np.convolve(expect, [1, m])
    assert np.allclose(g.coeffs, expect, rtol=1e-12)


def test_theta_family_mismatch():
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    with pytest.raises(UnsupportedModelError):
        denominator_g(spec, Theta(0.5))


# --- published representation matrices ------------------------------------

def _display(rep, ordered):
    perm = order_permutation(rep.spec.T, ordered)
    return rep.G[perm]


def test_G_T2_published():
    for y0 in (0, 1):
        spec = ModelSpec(family="ar1", T=2, covariates="none", y0=y0)
        B = np.exp(0.8)
        rep = build_representation(spec, Theta(0.8))
        got = _display(rep, weight_ordered_histories(2))
        assert np.allclose(got, pv.g2_general_y0(B, y0), rtol=1e-13)


def test_G_T3_published():
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    B = np.exp(0.5)
    rep = build_representation(spec, Theta(0.5))
    got = _display(rep, weight_ordered_histories(3))
    assert np.allclose(got, pv.g3_no_covariate(B), rtol=1e-13)


def test_G_T3_covariate_published():
    x = (1.0, 0.25, -0.5)
    spec = ModelSpec(family="ar1", T=3, covariates="series", support_x=(x,))
    B, C = np.exp(0.5), np.exp(0.8)
    rep = build_representation(spec, Theta(0.5, (0.8,)))
    got = _display(rep, weight_ordered_histories(3))
    assert np.allclose(got, pv.g3_covariate(B, C, x), rtol=1e-12)


def test_G_time_trend_published():
    spec = ModelSpec(family="ar1", T=3, covariates="time_trend")
    B, C = np.exp(0.5), np.exp(0.8)
    rep = build_representation(spec, Theta(0.5, (0.8,)))
    got = _display(rep, weight_ordered_histories(3))
    assert np.allclose(got, pv.g_time_trend(B, C), rtol=1e-12)


def test_G_time_dummies_published():
    spec = ModelSpec(family="ar1", T=3, covariates="time_dummies")
    B, C, D = np.exp(0.5), np.exp(0.8), np.exp(0.3)
    for y0 in (0, 1):
        rep = build_representation(spec, Theta(0.5, (0.8, 0.3)), y0=y0)
        got = _display(rep, reverse_ordered_histories(3))
        assert np.allclose(got, pv.g_time_dummies(B, C, D, y0), rtol=1e-12)


def test_G_ar2_shape_and_rank():
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    rep = build_representation(spec, Theta((0.5, 0.3)))
    assert rep.G.shape == (8, 7)
    assert rep.rank == 7
    spec_cov = ModelSpec(family="ar2", T=3, covariates="series",
                         support_x=((0.5, 1.0, -0.5),))
    rep_cov = build_representation(spec_cov, Theta((0.5, 0.3), (0.4,)))
    assert rep_cov.G.shape == (8, 8)
    assert rep_cov.rank == 8


# --- representation invariants --------------------------------------------

def _random_theta(rng, spec):
    beta = tuple(rng.uniform(-1, 1, size=2 if spec.family == "ar2" else 1))
    dim = 0 if spec.covariates == "none" else len(spec.x_values(0)[0])
    gamma = tuple(rng.uniform(-1, 1, size=dim)) if dim else ()
    return Theta(beta, gamma)


SPECS = [
    ModelSpec(family="ar1", T=2, covariates="none"),
    ModelSpec(family="ar1", T=3, covariates="none", y0=1),
    ModelSpec(family="ar1", T=3, covariates="time_trend"),
    ModelSpec(family="ar1", T=3, covariates="time_dummies"),
    ModelSpec(family="ar1", T=2, covariates="series", support_x=((1.0, 0.0),)),
    ModelSpec(family="ar2", T=3, covariates="none"),
    ModelSpec(family="ar2", T=3, covariates="series", support_x=((0.3, -0.2, 0.9),)),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}-{s.covariates}")
def test_normalization_identity(spec):
    rng = np.random.default_rng(11)
    for _ in range(50):
        theta = _random_theta(rng, spec)
        A = float(np.exp(rng.uniform(-3, 3)))
        total = likelihood_vector(spec, theta, A).sum()
        assert abs(total - 1.0) < 1e-12


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}-{s.covariates}")
def test_representation_identity(spec):
    rng = np.random.default_rng(23)
    for _ in range(50):
        theta = _random_theta(rng, spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            rep = build_representation(spec, theta)
        A = float(np.exp(rng.uniform(-3, 3)))
        V = A ** np.arange(rep.d + 1)
        L = likelihood_vector(spec, theta, A)
        assert np.max(np.abs(rep.G @ V / rep.g(A) - L)) < 1e-10


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}-{s.covariates}")
def test_row_sum_equals_g(spec):
    rng = np.random.default_rng(5)
    theta = _random_theta(rng, spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        rep = build_representation(spec, theta)
    rows = rep.G.sum(axis=0)
    ref = rep.g.padded(rep.d + 1)
    assert np.max(np.abs(rows - ref) / np.maximum(np.abs(ref), 1e-300)) < 1e-12


def test_G_entries_nonnegative():
    rng = np.random.default_rng(3)
    for spec in SPECS:
        theta = _random_theta(rng, spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateModelWarning)
            rep = build_representation(spec, theta)
        assert np.all(rep.G >= 0)


def test_rank_full_for_nondegenerate():
    rng = np.random.default_rng(17)
    for T in (2, 3, 4):
        spec = ModelSpec(family="ar1", T=T, covariates="none")
        for _ in range(5):
            beta = rng.uniform(0.2, 1.5) * rng.choice([-1, 1])
            rep = build_representation(spec, Theta(beta))
            assert rep.rank == 2 * T
            assert not rep.rank_deficient


def test_degenerate_warning_B_equal_one():
    spec = ModelSpec(family="ar1", T=2, covariates="none")
    with pytest.warns(DegenerateModelWarning):
        rep = build_representation(spec, Theta(0.0))
    assert rep.rank_deficient


def test_linear_independence_lemma():
    # the 2T x 2T matrix [A_i^k / g(A_i)] at distinct positive nodes is
    # nonsingular; Chebyshev-spaced nodes on [0.2, 5]
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    rep = build_representation(spec, Theta(0.5))
    n = rep.d + 1
    k = np.arange(n)
    nodes = 2.6 + 2.4 * np.cos((2 * k + 1) / (2 * n) * np.pi)
    M = nodes[None, :] ** k[:, None] / rep.g(nodes)[None, :]
    det = np.linalg.det(M)
    assert det != 0
    assert np.isfinite(np.linalg.cond(M))


def test_likelihood_direct_matches_G_row():
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    theta = Theta(0.5)
    rep = build_representation(spec, theta)
    A = float(np.exp(-2.0))
    for j, h in enumerate(rep.histories):
        direct = likelihood_direct(spec, theta, h, A)
        viaG = rep.G[j] @ (A ** np.arange(rep.d + 1)) / rep.g(A)
        assert abs(direct - viaG) < 1e-14


def test_uniform_coin_at_origin():
    spec = ModelSpec(family="ar1", T=2, covariates="none")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        L = likelihood_vector(spec, Theta(0.0), 1.0)
    assert np.allclose(L, 0.25, atol=1e-15)


# --- serialization ----------------------------------------------------------

def test_modelspec_json_roundtrip():
    specs = [
        ModelSpec(family="ar1", T=3, covariates="time_trend"),
        ModelSpec(family="ar2", T=3, covariates="series",
                  support_x=((0.5, 1.0, -0.5),), y0=1, y_minus1=1),
        ModelSpec(family="ar1", T=2, covariates="series",
                  support_x=((1.0, 0.0), (0.0, 0.0))),
    ]
    for spec in specs:
        doc = spec.to_json()
        again = ModelSpec.from_json(doc)
        assert again == spec
        assert json.loads(doc)["T"] == spec.T


def test_modelspec_validation():
    with pytest.raises(ValueError):
        ModelSpec(family="ar1", T=1, covariates="none")
    with pytest.raises(UnsupportedModelError):
        ModelSpec(family="arma", T=3)
    with pytest.raises(ValueError):
        ModelSpec(family="ar1", T=2, covariates="series", support_x=())
    with pytest.raises(ValueError):
        ModelSpec(family="ar1", T=2, covariates="series", support_x=((1.0,),))


def test_time_dummy_normalization():
    spec = ModelSpec(family="ar1", T=3, covariates="time_dummies")
    x = spec.x_values(0)
    assert x[0] == (0.0, 0.0)          # gamma_1 = 0 normalization
    assert x[1] == (1.0, 0.0)
    assert x[2] == (0.0, 1.0)

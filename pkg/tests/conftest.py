import numpy as np
import pytest

from panelogit import DiscreteMixture, ModelSpec, Theta, population_probs

EQUAL_MASS = DiscreteMixture((-2.0, 1.0), (0.5, 0.5))


@pytest.fixture(scope="session")
def t2_setup():
    spec = ModelSpec(family="ar1", T=2, covariates="none")
    theta0 = Theta(np.log(1.5))
    return spec, theta0, population_probs(spec, theta0, EQUAL_MASS)


@pytest.fixture(scope="session")
def t3_setup():
    spec = ModelSpec(family="ar1", T=3, covariates="none")
    theta0 = Theta(0.5)
    return spec, theta0, population_probs(spec, theta0, EQUAL_MASS)


@pytest.fixture(scope="session")
def time_trend_setup():
    spec = ModelSpec(family="ar1", T=3, covariates="time_trend")
    theta0 = Theta(0.5, (0.8,))
    return spec, theta0, population_probs(spec, theta0, EQUAL_MASS)


@pytest.fixture(scope="session")
def time_dummy_setup():
    spec = ModelSpec(family="ar1", T=3, covariates="time_dummies")
    theta0 = Theta(0.5, (0.8, 0.3))
    probs = population_probs(spec, theta0, {(0, 0): EQUAL_MASS, (0, 1): EQUAL_MASS})
    return spec, theta0, probs


@pytest.fixture(scope="session")
def t2_covariate_setup():
    spec = ModelSpec(family="ar1", T=2, covariates="series",
                     support_x=((1.0, 0.0), (0.0, 0.0)))
    theta0 = Theta(0.5, (0.8,))
    mixes = {(0, 0): EQUAL_MASS, (1, 0): DiscreteMixture((-2.0, -1.0), (0.5, 0.5))}
    return spec, theta0, population_probs(spec, theta0, mixes)


@pytest.fixture(scope="session")
def ar2_setup():
    spec = ModelSpec(family="ar2", T=3, covariates="none")
    theta0 = Theta((0.5, 0.3))
    return spec, theta0, population_probs(spec, theta0, EQUAL_MASS)

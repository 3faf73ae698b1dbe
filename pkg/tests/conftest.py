import numpy as np
import pytest

from seagle.simgen import gen_covariates, gen_genotypes, gen_random_effects_pheno
from seagle.vctest import build_input


def random_instance(n, L, seed, tau=1.0, sigma=1.0, nu=0.0,
                    maf_low=0.05, maf_high=0.4):
    """A complete simulated test instance with P=3 covariates."""
    rng = np.random.default_rng(seed)
    G = gen_genotypes(n, L, maf_low, maf_high, rng)
    X, env = gen_covariates(n, rng)
    y = gen_random_effects_pheno(X, G, env, tau, sigma, nu, rng)
    return build_input(y, X, env, G)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_instance():
    return random_instance(n=120, L=8, seed=3)

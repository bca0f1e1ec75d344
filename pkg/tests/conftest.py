import numpy as np
import pytest
from scipy.stats import rankdata

import taildep as td


@pytest.fixture(scope="session")
def comonotone3():
    return td.pseudo_sample([1.0, 2.0, 3.0], [10.0, 20.0, 30.0])


@pytest.fixture(scope="session")
def antitone4():
    return td.pseudo_sample([1.0, 2.0, 3.0, 4.0], [40.0, 30.0, 20.0, 10.0])


@pytest.fixture(scope="session")
def clayton_sample_5000():
    rng = np.random.default_rng(42)
    u, v = td.Clayton(1.0).sample(5000, rng)
    return td.pseudo_sample(u, v)


@pytest.fixture(scope="session")
def gumbel_sample_5000():
    rng = np.random.default_rng(7)
    u, v = td.Gumbel(2.0).sample(5000, rng)
    return td.pseudo_sample(u, v)


@pytest.fixture(scope="session")
def rotated_gumbel_1000():
    rng = np.random.default_rng(11)
    u, v = td.Survival(td.Gumbel(1.5)).sample(1000, rng)
    return td.pseudo_sample(u, v)


@pytest.fixture(scope="session")
def clayton_replications():
    """Estimates of the lower TDC at 5% and 10% ranks: 5000 draws of n=5000.

    Shared by the convergence test and the Monte Carlo validation of the
    variance and covariance kernels.
    """
    n, reps = 5000, 5000
    i1, i2 = 250, 500
    l1 = np.empty(reps)
    l2 = np.empty(reps)
    gen = td.Clayton(1.0)
    for r in range(reps):
        rng = np.random.default_rng([555, r])
        u, v = gen.sample(n, rng)
        m = np.maximum(rankdata(u, method="max"), rankdata(v, method="max"))
        l1[r] = np.sum(m <= i1) / i1
        l2[r] = np.sum(m <= i2) / i2
    return l1, l2

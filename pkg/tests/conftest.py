import numpy as np
import pytest

from sqreg.core import Dataset


def random_dataset(rng, n, p, intercept=False):
    """Unstructured Gaussian design with a Gaussian response."""
    X = rng.normal(size=(n, p))
    if intercept:
        X[:, 0] = 1.0
    return Dataset(X, rng.normal(size=n))


def planted_dataset(rng, n, p, support, amplitudes=None, noise=0.2, intercept=True):
    """Sparse linear signal on the given support plus Gaussian noise."""
    X = rng.normal(size=(n, p))
    if intercept:
        X[:, 0] = 1.0
    theta = np.zeros(p)
    if amplitudes is None:
        amplitudes = rng.choice([-1.0, 1.0], size=len(support)) * rng.uniform(
            1.5, 2.5, size=len(support))
    theta[list(support)] = amplitudes
    y = X @ theta + noise * rng.normal(size=n)
    return Dataset(X, y), theta


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)

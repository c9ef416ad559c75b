import numpy as np
import pytest

from maxrobust.data import Dataset, generate_gaussian_separable


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture
def ds_aug():
    """Small augmented training set, comfortably separable."""
    return generate_gaussian_separable(d=8, n=12, seed=3, augment=True)


@pytest.fixture
def ds_plain():
    """Same scale without the bias column."""
    return generate_gaussian_separable(d=8, n=12, seed=3, augment=False)


@pytest.fixture
def ds_canonical():
    """Two mirrored points on the first axis; every max margin equals 1."""
    X = np.array([[1.0, 0.0], [-1.0, 0.0]])
    y = np.array([1.0, -1.0])
    teacher = np.array([1.0, 0.0])
    return Dataset(X=X, y=y, teacher=teacher, seed=0, d=2, n=2, augmented=False)

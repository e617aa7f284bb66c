import numpy as np
import pytest

from robustirt import ItemBank, build_gauss_hermite


@pytest.fixture(scope="session")
def grid21():
    return build_gauss_hermite(21)


@pytest.fixture(scope="session")
def bank5():
    """The symmetric five-item bank used throughout the influence analysis."""
    return ItemBank(difficulties=np.array([-2.0, -1.0, 0.0, 1.0, 2.0]))


def simulate_clean(bank, n, rng):
    """Independent reference generator: standard-normal abilities, 1PL responses."""
    theta = rng.standard_normal(n)
    p = 1.0 / (1.0 + np.exp(-bank.scale * (theta[:, None] - bank.difficulties[None, :])))
    return (rng.random(p.shape) < p).astype(np.int8)

import numpy as np
import pytest

from fodsid import FracSystem, augment


@pytest.fixture
def scalar_system():
    """The worked scalar example: alpha=0.5, A=[0.2], noiseless."""
    return FracSystem(alpha=[0.5], A=[[0.2]], sigma=0.0)


@pytest.fixture
def scalar_system_noisy():
    return FracSystem(alpha=[0.5], A=[[0.2]], sigma=0.1)


@pytest.fixture
def scalar_aug(scalar_system):
    return augment(scalar_system, 2)


def random_system(rng, n=None, sigma=0.0, with_b=False, m=1):
    """Small random stable-ish system with orders in (0, 2)."""
    n = n if n is not None else int(rng.integers(1, 4))
    alpha = rng.uniform(0.1, 1.9, size=n)
    A = rng.normal(scale=0.3 / np.sqrt(n), size=(n, n))
    B = rng.normal(size=(n, m)) if with_b else None
    return FracSystem(alpha=alpha, A=A, B=B, sigma=sigma)

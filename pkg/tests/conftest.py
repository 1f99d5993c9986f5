import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("default")


def random_hermitian_pd(rng, M, floor=0.1):
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    return A.conj().T @ A + floor * np.eye(M)


def random_vector(rng, M):
    return rng.standard_normal(M) + 1j * rng.standard_normal(M)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


def random_hermitian(gen, n, complex_=True):
    a = gen.standard_normal((n, n))
    if complex_:
        a = a + 1j * gen.standard_normal((n, n))
    return (a + a.conj().T) / 2


def random_psd(gen, n, rank=None, complex_=False):
    rank = n if rank is None else rank
    b = gen.standard_normal((n, rank))
    if complex_:
        b = b + 1j * gen.standard_normal((n, rank))
    return b @ b.conj().T

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffkit.kernels import Gaussian, Laplacian, Polynomial, SquaredDistance, gram
from rffkit.linalg import HermitianMatrix
from rffkit.rkhs import (
    KernelMismatchError,
    NotPositiveDefiniteError,
    RkhsFunction,
    mercer_factorize,
    mercer_map_for_kernel,
    rkhs_eval,
    rkhs_inner,
    rkhs_norm,
    section,
)

KERNELS = [Gaussian(1.0), Laplacian(0.7), Polynomial(1.0, 2)]


def random_function(gen, kernel, m=3, d=2):
    c = gen.standard_normal(m) + 1j * gen.standard_normal(m)
    return RkhsFunction(kernel, gen.standard_normal((m, d)), c)


def test_section_examples(gen):
    x, y = gen.standard_normal(2), gen.standard_normal(2)
    k = Gaussian(1.0)
    assert rkhs_inner(section(k, x), section(k, x)) == pytest.approx(1.0)
    assert rkhs_inner(section(k, x), section(k, y)) == pytest.approx(k(x, y))
    assert rkhs_eval(section(k, x), x) == pytest.approx(1.0)
    assert rkhs_norm(section(k, x)) == pytest.approx(1.0)


def test_inner_matches_double_sum(gen):
    k = Polynomial(1.0, 2)
    f, g = random_function(gen, k), random_function(gen, k)
    direct = 0j
    for cj, xj in zip(f.coeffs, f.anchors):
        for dk, yk in zip(g.coeffs, g.anchors):
            direct += cj * np.conj(dk) * (float(xj @ yk) + 1.0) ** 2
    assert abs(rkhs_inner(f, g) - direct) < 1e-12 * max(1.0, abs(direct))


def test_cancellation():
    f = RkhsFunction(Gaussian(1.0), [[0.0], [0.0]], [1.0, -1.0])
    for y in (-1.0, 0.0, 2.5):
        assert abs(rkhs_eval(f, [y])) == 0.0


def test_zero_function_norm():
    assert rkhs_norm(RkhsFunction(Gaussian(1.0), [[1.0, 2.0]], [0.0])) == 0.0


def test_eval_two_routes(gen):
    k = Laplacian(1.3)
    f = random_function(gen, k, m=4)
    y = gen.standard_normal(2)
    assert abs(rkhs_eval(f, y) - rkhs_inner(f, section(k, y))) < 1e-12


def test_arithmetic(gen):
    k = Gaussian(1.0)
    f, g = random_function(gen, k), random_function(gen, k)
    y = gen.standard_normal(2)
    assert (f + g)(y) == pytest.approx(f(y) + g(y))
    assert (f - g)(y) == pytest.approx(f(y) - g(y))
    assert (2j * f)(y) == pytest.approx(2j * f(y))


def test_kernel_mismatch(gen):
    with pytest.raises(KernelMismatchError):
        rkhs_inner(random_function(gen, Gaussian(1.0)), random_function(gen, Gaussian(2.0)))


def test_norm_of_non_pd_kernel_raises():
    f = RkhsFunction(SquaredDistance(), [[0.0], [1.0]], [1.0, -1.0])
    with pytest.raises(NotPositiveDefiniteError):
        rkhs_norm(f)


@given(st.integers(0, 2**31), st.sampled_from(KERNELS))
def test_hilbert_space_identities(seed, k):
    gen = np.random.default_rng(seed)
    f, g = random_function(gen, k), random_function(gen, k)
    y = gen.standard_normal(2)
    assert abs(rkhs_inner(f, section(k, y)) - f(y)) < 1e-10
    nf, ng = rkhs_norm(f), rkhs_norm(g)
    assert abs(rkhs_inner(f, g)) <= nf * ng + 1e-10
    assert rkhs_norm(f + g) <= nf + ng + 1e-10
    # complex polarisation
    polar = sum((1j**p) * rkhs_norm(f + (1j**p) * g) ** 2 for p in range(4)) / 4
    assert abs(polar - rkhs_inner(f, g)) < 1e-10 * max(1.0, nf * ng)


class TestMercer:
    def test_identity(self):
        m = mercer_factorize(np.eye(4))
        assert m.reconstruction_error() < 1e-14

    def test_rank_one(self):
        f = mercer_factorize([[2.0, 4.0], [4.0, 8.0]]).features
        assert f[0] @ f[1].conj() == pytest.approx(4.0)
        assert np.vdot(f[0], f[0]).real == pytest.approx(2.0)
        assert np.vdot(f[1], f[1]).real == pytest.approx(8.0)

    def test_gaussian_gram(self, gen):
        m = mercer_map_for_kernel(Gaussian(1.0), gen.standard_normal((10, 3)))
        assert m.reconstruction_error() <= 1e-8
        assert m.points.shape == (10, 3)

    def test_complex_gram(self, gen):
        b = gen.standard_normal((5, 5)) + 1j * gen.standard_normal((5, 5))
        g = HermitianMatrix(b @ b.conj().T)
        assert mercer_factorize(g).reconstruction_error() <= 1e-8 * np.max(np.abs(g.entries))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            mercer_factorize(gram(SquaredDistance(), [0.0, 1.0, 2.0]))

    def test_clamps_roundoff(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        a[1, 1] -= 1e-12
        m = mercer_factorize(a)
        assert m.reconstruction_error() <= 1e-11

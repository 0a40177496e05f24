import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rffkit.kernels import Gaussian, gram
from rffkit.rff import (
    FeatureMap,
    RffKernel,
    estimate_gram,
    estimate_pair,
    exact_gaussian_gram,
    feature_matrix,
    features,
    gaussian_fourier_quadrature,
    pairwise_sum,
    sample_feature_map,
)


def test_deterministic():
    a = sample_feature_map(2, 4, 1.0, 7)
    b = sample_feature_map(2, 4, 1.0, 7)
    assert np.array_equal(a.frequencies, b.frequencies)
    assert np.array_equal(a.phases, b.phases)
    c = sample_feature_map(2, 4, 1.0, 8)
    assert not np.array_equal(a.frequencies, c.frequencies)


def test_prefix_stability():
    small, big = sample_feature_map(3, 10, 1.0, 5), sample_feature_map(3, 40, 1.0, 5)
    assert np.array_equal(small.frequencies, big.frequencies[:10])


def test_serialisation_round_trip():
    fm = sample_feature_map(3, 64, 0.5, 11)
    assert fm.to_dict() == {"d": 3, "D": 64, "sigma": 0.5, "seed": 11}
    back = FeatureMap.from_json(fm.to_json())
    assert np.array_equal(back.frequencies, fm.frequencies)
    assert np.array_equal(back.phases, fm.phases)


def test_frequency_variance():
    fm = sample_feature_map(1, 100_000, 2.0, 3)
    w = fm.frequencies[:, 0]
    var = float(np.var(w))
    se = 0.25 * math.sqrt(2.0 / len(w))
    assert abs(var - 0.25) < 3 * se


def test_frequencies_normal_across_seeds():
    # per-seed KS p-values of a correct sampler are themselves uniform
    ps = [stats.kstest(sample_feature_map(2, 20_000, 1.0, s).frequencies.ravel(), "norm").pvalue for s in range(30)]
    assert stats.kstest(ps, "uniform").pvalue > 0.001


def test_phases_uniform():
    fm = sample_feature_map(1, 100_000, 1.0, 4)
    b = fm.phases
    assert np.all((b >= 0) & (b < 2 * math.pi))
    assert stats.kstest(b / (2 * math.pi), "uniform").pvalue > 0.01


def _with_params(fm, w, b):
    object.__setattr__(fm, "frequencies", np.asarray(w, dtype=float))
    object.__setattr__(fm, "phases", np.asarray(b, dtype=float))
    return fm


def test_feature_special_cases():
    fm = _with_params(sample_feature_map(2, 2, 1.0, 0), np.zeros((2, 2)), [0.0, math.pi / 2])
    z = features(fm, [0.3, -4.0])
    assert z[0] == pytest.approx(math.sqrt(2))
    assert abs(z[1]) < 1e-15


def test_features_match_scalar_loop(gen):
    fm = sample_feature_map(3, 50, 0.8, 9)
    x = gen.standard_normal(3)
    z = features(fm, x)
    for k in range(50):
        w = fm.frequencies[k]
        val = math.sqrt(2) * math.cos(w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + fm.phases[k])
        assert abs(z[k] - val) < 1e-15 * 10


def test_estimate_pair_diagonal(gen):
    fm = sample_feature_map(2, 128, 1.0, 1)
    x = gen.standard_normal(2)
    est = estimate_pair(fm, x, x)
    expect = np.mean(2 * np.cos(fm.frequencies @ x + fm.phases) ** 2)
    assert est.kernel_true == 1.0
    assert est.value == pytest.approx(expect, abs=1e-14)


def test_estimate_pair_unbiased():
    x, y = np.zeros(2), np.array([0.6, 0.8])
    vals = np.array([estimate_pair(sample_feature_map(2, 2048, 1.0, s), x, y).value for s in range(200)])
    target = math.exp(-0.5)
    assert abs(vals.mean() - target) < 3 * vals.std(ddof=1) / math.sqrt(200)


def test_single_feature_integrand():
    x, y = np.array([0.2, -0.1, 0.4]), np.array([-0.5, 0.3, 0.0])
    fm = sample_feature_map(3, 1_000_000, 1.0, 21)
    prods = feature_matrix(fm, [x])[0] * feature_matrix(fm, [y])[0]
    se = prods.std() / math.sqrt(len(prods))
    assert abs(prods.mean() - math.exp(-np.sum((x - y) ** 2) / 2)) < 3 * se


def test_estimate_gram_one_point():
    g = estimate_gram(sample_feature_map(2, 16, 1.0, 0), [[0.5, 0.5]])
    assert g.dim == 1 and g.entries[0, 0] >= 0


def test_estimate_gram_large_D(gen):
    x = gen.standard_normal((8, 2))
    g = estimate_gram(sample_feature_map(2, 2**15, 1.0, 12), x)
    assert np.max(np.abs(g.entries - exact_gaussian_gram(x, 1.0).entries)) <= 0.05


def test_estimate_gram_triple_loop(gen):
    x = gen.standard_normal((4, 2))
    fm = sample_feature_map(2, 30, 1.0, 2)
    z = feature_matrix(fm, x)
    oracle = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            s = 0.0
            for k in range(30):
                s += z[i, k] * z[j, k]
            oracle[i, j] = s / 30
    np.testing.assert_allclose(estimate_gram(fm, x).entries, oracle, atol=1e-12)


def test_rff_kernel_node(gen):
    x = gen.standard_normal((5, 2))
    fm = sample_feature_map(2, 64, 1.0, 3)
    np.testing.assert_allclose(gram(RffKernel(fm), x).entries, estimate_gram(fm, x).entries, atol=1e-15)


def test_pairwise_sum_is_exact_for_integers():
    a = np.arange(1000, dtype=float)
    assert pairwise_sum(a) == 499500.0


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("xi", [0.0, 0.5, 1.0, 2.0, 3.0])
def test_fourier_identity(gamma, xi):
    val = gaussian_fourier_quadrature(xi, gamma)
    assert abs(val - math.exp(-(gamma**2) * xi**2 / 2)) <= 1e-6


@given(st.integers(1, 6), st.integers(1, 40), st.floats(0.1, 5.0), st.integers(0, 2**40))
def test_feature_bounds(d, D, sigma, seed):
    fm = sample_feature_map(d, D, sigma, seed)
    z = feature_matrix(fm, np.ones((2, d)))
    assert np.all(np.abs(z) <= math.sqrt(2) + 1e-15)
    assert np.all((fm.phases >= 0) & (fm.phases < 2 * math.pi))


def test_invalid():
    with pytest.raises(ValueError):
        sample_feature_map(2, 0, 1.0, 0)
    with pytest.raises(ValueError):
        sample_feature_map(2, 4, -1.0, 0)

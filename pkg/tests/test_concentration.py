import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rffkit import concentration as c
from rffkit.datasets import clustered_points, gaussian_points
from rffkit.linalg import intrinsic_dim
from rffkit.rff import exact_gaussian_gram


class TestScalarBounds:
    def test_markov(self):
        assert c.markov_bound(1.0, 2.0) == 0.5
        assert c.markov_bound(0.0, 1.0) == 0.0
        assert math.exp(-3) <= c.markov_bound(1.0, 3.0)

    def test_chebyshev(self):
        assert c.chebyshev_bound(1.0, 2.0) == 0.25
        assert c.chebyshev_bound(0.0, 0.3) == 0.0
        # uniform[0, 1]: P(|U - 1/2| >= 0.4) = 0.2
        assert c.chebyshev_bound(1 / 12, 0.4) == pytest.approx(0.5208, abs=1e-4)
        assert c.chebyshev_bound(1 / 12, 0.4) >= 0.2

    def test_invalid(self):
        with pytest.raises(ValueError):
            c.markov_bound(-1.0, 1.0)
        with pytest.raises(ValueError):
            c.chebyshev_bound(1.0, 0.0)

    def test_chernoff_normal(self):
        lam = np.arange(0.0, 4.0 + 1e-9, 1e-3)
        table = np.column_stack([lam, lam**2 / 2])
        assert abs(c.chernoff_bound_numeric(table, 2.0) - math.exp(-2.0)) < 1e-3

    def test_chernoff_below_mean_is_one(self):
        table = c.log_mgf_table([-1.0, 1.0], [0.5, 0.5], np.linspace(0, 3, 50))
        assert c.chernoff_bound_numeric(table, -0.5) == 1.0

    def test_chernoff_needs_nodes(self):
        with pytest.raises(ValueError):
            c.chernoff_bound_numeric([[0.0, 0.0], [1.0, 0.5]], 1.0)

    def test_cumulant_additivity(self):
        lam = np.linspace(-2, 2, 41)
        one = c.log_mgf_table([0.0, 1.0], [0.5, 0.5], lam)
        k = np.arange(5)
        probs = np.array([math.comb(4, j) for j in k]) / 16
        direct = c.log_mgf_table(k.astype(float), probs, lam)
        np.testing.assert_allclose(c.sum_log_mgf(one, 4), direct, atol=1e-9)

    def test_chernoff_dominates_binomial_tail(self):
        lam = np.linspace(0, 5, 2001)
        table = c.sum_log_mgf(c.log_mgf_table([0.0, 1.0], [0.5, 0.5], lam), 40)
        for t in (25, 30, 35):
            assert stats.binom.sf(t - 1, 40, 0.5) <= c.chernoff_bound_numeric(table, t)

    def test_hoeffding_examples(self):
        assert c.hoeffding_tail([(0.0, 1.0)], 1.0) == pytest.approx(math.exp(-2))
        D, eps = 500, 0.2
        assert c.hoeffding_tail([(-2.0, 2.0)] * D, D * eps) == pytest.approx(math.exp(-D * eps**2 / 8))
        assert c.hoeffding_tail([(0.0, 1.0)], 1e-12) == pytest.approx(1.0)
        assert c.hoeffding_tail([(0.0, 1.0)], 0.3, sides="two") == pytest.approx(min(1, 2 * math.exp(-0.18)))

    def test_hoeffding_invalid(self):
        with pytest.raises(ValueError):
            c.hoeffding_tail([(1.0, 1.0)], 1.0)
        with pytest.raises(ValueError):
            c.hoeffding_tail([(0.0, 1.0)], 0.0)

    @given(
        st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True),
        st.integers(0, 2**31),
    )
    def test_hoeffding_lemma(self, values, seed):
        # centred variable on [a, b]: log E e^{lambda X} <= lambda^2 (b - a)^2 / 8
        v = np.array(values)
        p = np.random.default_rng(seed).dirichlet(np.ones(len(v)))
        v = v - p @ v
        lam = np.linspace(-4, 4, 81)
        psi = c.log_mgf_table(v, p, lam)[:, 1]
        assert np.all(psi <= c.hoeffding_log_mgf_bound(lam, v.min(), v.max()) + 1e-12)

    def test_rff_min_D_hoeffding(self):
        assert c.rff_min_D_hoeffding(1000, 0.1, 0.01) == 18421
        assert c.rff_min_D_hoeffding(1, 1.0, 0.9) == math.ceil(16 * math.log(1 / 0.9))
        for eps in (0.05, 0.1, 0.3):
            raw = 16 / eps**2 * math.log(50 / 0.05)
            assert c.rff_min_D_hoeffding(50, eps, 0.05) == math.ceil(raw)
            assert c.rff_min_D_hoeffding(50, 2 * eps, 0.05) == math.ceil(raw / 4)

    def test_rff_min_D_hoeffding_invalid(self):
        for args in ((0, 0.1, 0.1), (1, 0.0, 0.1), (1, 0.1, 1.0), (1, 0.1, 0.0)):
            with pytest.raises(ValueError):
                c.rff_min_D_hoeffding(*args)


class TestMatrixBounds:
    def test_expectation_examples(self):
        q = c.MatrixBernsteinQuery(1, 3.0, 0.0, 1, 1)
        assert c.bernstein_expectation_bound(q) == pytest.approx(math.log(2))
        q = c.MatrixBernsteinQuery(1, 1e-12, 1.0, 3, 3)
        assert c.bernstein_expectation_bound(q) == pytest.approx(math.sqrt(2 * math.log(6)), rel=1e-10)

    def test_expectation_scaling(self):
        lg = math.log(7)
        first = lambda v: c.bernstein_expectation_bound(c.MatrixBernsteinQuery(1, 2.0, v, 3, 4)) - 2.0 / 3 * lg
        assert first(2.0) == pytest.approx(math.sqrt(2) * first(1.0), rel=1e-12)

    def test_tail_regimes(self):
        v, L = 0.01, 1.0
        q = c.MatrixBernsteinQuery(1, L, v, 4, 4)
        t = v / (100 * L)
        assert c.bernstein_tail_raw(q, t) / (8 * math.exp(-(t**2) / (2 * v))) == pytest.approx(1.0, abs=1e-3)
        t = 100 * v / L
        ratio = math.log(c.bernstein_tail_raw(q, t) / 8) / (-3 * t / (2 * L))
        assert ratio == pytest.approx(1.0, abs=0.03)

    def test_tail_clipped(self):
        q = c.MatrixBernsteinQuery(1, 1.0, 1.0, 5, 5)
        assert c.bernstein_tail_bound(q, 0.01) == 1.0

    def test_hermitian_cross_check(self):
        d, v, L, t = 5, 1.5, 0.7, 3.0
        q = c.MatrixBernsteinQuery(1, L, v, d, d)
        # a d x d Hermitian sum dilates to the general statement with d1 + d2 = 2d
        assert c.bernstein_tail_raw(q, t) == pytest.approx(2 * c.hermitian_bernstein_tail_raw(d, v, L, t))
        qh = c.MatrixBernsteinQuery(1, L, v, 1, d - 1)
        assert c.bernstein_expectation_bound(qh) == pytest.approx(c.hermitian_bernstein_expectation_bound(d, v, L))

    def test_sampling_bounds(self):
        b = c.sampling_estimator_bounds(1.0, 1.0, 1, 1, 1)
        lg = math.log(2)
        assert b.expectation_bound == pytest.approx(math.sqrt(2 * lg) + 2 / 3 * lg)
        first = lambda n: c.sampling_estimator_bounds(3.0, 1.0, n, 2, 2).expectation_bound - 2 * math.log(4) / (3 * n)
        assert first(40) == pytest.approx(first(10) / 2, rel=1e-12)
        s = c.sampling_estimator_bounds(2.0, 1.5, 7, 3, 4, t=0.8)
        q = c.MatrixBernsteinQuery(7, 2 * 1.5 / 7, 2.0 / 7, 3, 4)
        assert s.tail_bound == pytest.approx(c.bernstein_tail_bound(q, 0.8), rel=1e-12)
        assert s.expectation_bound == pytest.approx(c.bernstein_expectation_bound(q), rel=1e-12)

    def test_rff_min_D_bernstein(self):
        assert c.rff_min_D_bernstein(100, 1.0, 0.5) == 85
        ds = [c.rff_min_D_bernstein(20, r, 0.3) for r in (1.0, 2.5, 7.0, 20.0)]
        assert ds == sorted(ds) and ds[-1] > ds[0]

    def test_statement_constant(self):
        for n, r, eps in ((100, 1.0, 0.5), (16, 2.0, 0.5), (50, 3.3, 0.2)):
            lo = c.rff_min_D_bernstein_real(n, r, eps)
            assert c.rff_min_D_bernstein_real(n, r, eps, constant=16.0) == pytest.approx(4 * lo)
            d4, d16 = c.rff_min_D_bernstein(n, r, eps), c.rff_min_D_bernstein(n, r, eps, statement_constant=True)
            assert 4 * d4 - 3 <= d16 <= 4 * d4

    def test_rff_min_D_bernstein_invalid(self):
        with pytest.raises(ValueError):
            c.rff_min_D_bernstein(10, 11.0, 0.5)
        with pytest.raises(ValueError):
            c.rff_min_D_bernstein(10, 2.0, 1.0)

    def test_relative_error_bound_at_min_D(self):
        # at D = 4 log(2n) r / eps^2 the bound is eps + eps^2 / 3 <= 2 eps
        n, r, eps = 16, 2.0, 0.5
        D = c.rff_min_D_bernstein_real(n, r, eps)
        assert c.rff_relative_error_bound(n, r, D) == pytest.approx(eps + eps**2 / 3)


class TestHarness:
    def test_wilson(self):
        lo, hi = c.wilson_interval(0, 100)
        assert lo == 0.0 and 0.0 < hi < 0.07
        lo, hi = c.wilson_interval(50, 100)
        assert lo < 0.5 < hi
        assert hi - 0.5 == pytest.approx(0.5 - lo)

    def test_constant_statistic(self):
        tail = c.empirical_tail(lambda s: 0.0, 1.0, trials=200, seed=1)
        assert tail.frequency == 0.0 and tail.exceed == 0

    def test_fair_coin(self):
        def coin_sum(seed):
            return float(np.random.default_rng(seed).integers(0, 2, 100).sum())

        tail = c.empirical_tail(coin_sum, 50.0, trials=2000, seed=3)
        lo, hi = tail.wilson_interval
        assert lo <= stats.binom.sf(49, 100, 0.5) <= hi
        assert abs(tail.frequency - 0.5) < 0.1

    def test_trials_minimum(self):
        with pytest.raises(ValueError):
            c.empirical_tail(lambda s: 0.0, 1.0, trials=99)

    def test_run_trials_thread_independent(self):
        f = lambda s: (s % 1000) / 7.0
        a = c.run_trials(f, 300, seed=9, threads=1)
        b = c.run_trials(f, 300, seed=9, threads=6)
        assert np.array_equal(a, b)

    def test_rff_pair_tail_within_delta(self):
        eps, delta = 0.3, 0.05
        D = c.rff_min_D_hoeffding(1, eps, delta)
        x, y = gaussian_points(2, 5, 4, 0.5)
        tail = c.empirical_tail(c.rff_pair_error(x, y, 1.0, D), eps, trials=300, seed=2, strict=True)
        assert tail.wilson_interval[0] <= delta

    def test_reports(self):
        tail = c.tail_from_values(np.array([0.0] * 99 + [1.0]), 0.5)
        rep = c.tail_report(0.5, tail, {"a": 1})
        assert rep.verdict == "consistent"
        assert set(rep.to_dict()) >= {"config", "analytic_bound", "empirical", "wilson_99", "verdict"}
        bad = c.tail_report(0.001, c.tail_from_values(np.ones(200), 0.5), {})
        assert bad.verdict == "violated"
        m = c.mean_report(1.0, np.full(20, 3.0), {})
        assert m.verdict == "violated" and m.empirical_estimate == 3.0

    def test_matrix_error_large_D(self):
        pts = gaussian_points(8, 2, 1)
        res = c.empirical_matrix_error(pts, 1.0, 2**16, trials=10, seed=5)
        assert res.mean_relative <= 0.05

    def test_matrix_error_deterministic(self):
        pts = gaussian_points(6, 2, 1)
        a = c.empirical_matrix_error(pts, 1.0, 64, trials=70, seed=5, threads=1)
        b = c.empirical_matrix_error(pts, 1.0, 64, trials=70, seed=5, threads=3)
        assert np.array_equal(a.errors, b.errors)

    def test_matrix_error_at_min_D(self):
        pts = clustered_points(16, 3, 0)
        g = exact_gaussian_gram(pts, 1.0)
        D = c.rff_min_D_bernstein(16, intrinsic_dim(g), 0.5)
        res = c.empirical_matrix_error(pts, 1.0, D, trials=20, seed=1)
        assert res.mean_relative <= 1.0

    def test_rff_bernstein_query(self):
        q = c.rff_bernstein_query(3.0, 4, 100)
        assert (q.d1, q.d2, q.n_summands) == (4, 4, 100)
        assert q.L == pytest.approx(4 * 4 / 100)
        assert q.v == pytest.approx(2 * 4 * 3.0 / 100)

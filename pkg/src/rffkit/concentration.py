"""Tail and expectation bounds, plus a seeded Monte Carlo harness that checks them.

Scalar side: Markov, Chebyshev, a numeric Cramer-Chernoff bound from a
log-MGF table, Hoeffding, and the RFF feature count from Hoeffding.
Matrix side: Matrix Bernstein (rectangular and Hermitian forms), the
bound for sampled matrix estimators, and the RFF feature count from intrinsic
dimension.

All probability bounds are clipped to [0, 1].
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng
from .kernels import as_points
from .linalg import eigvalsh_batch, intrinsic_dim, spectral_norm
from .rff import exact_gaussian_gram, feature_matrix, pairwise_sum, sample_feature_map, feature_products

CONFIDENCE = 0.99
TRIAL_CHUNK = 64


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")


# --- scalar bounds -----------------------------------------------------------------


def markov_bound(expectation: float, t: float) -> float:
    """P(X >= t) <= E[X] / t for non-negative X."""
    _positive("t", t)
    if expectation < 0:
        raise ValueError(f"expectation must be non-negative, got {expectation}")
    return min(1.0, expectation / t)


def chebyshev_bound(variance: float, t: float) -> float:
    """P(|X - EX| >= t) <= Var(X) / t^2."""
    _positive("t", t)
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    return min(1.0, variance / t**2)


def _as_table(mgf_table) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(mgf_table, dtype=np.float64)
    if arr.ndim != 2 or 2 not in arr.shape or arr.size == 0:
        raise ValueError("log-MGF table must be a list of (lambda, logMGF) pairs")
    if arr.shape[1] != 2:
        arr = arr.T
    if not np.all(np.isfinite(arr)):
        raise ValueError("log-MGF table has non-finite entries")
    return arr[:, 0], arr[:, 1]


def chernoff_bound_numeric(mgf_table, t: float) -> float:
    """exp(-max_lambda (lambda t - logMGF(lambda))) over the table's lambda > 0 nodes.

    Maximising over a finite grid can only undershoot the true supremum, so
    the result is never tighter than the exact Cramer-Chernoff bound.
    """
    lam, psi = _as_table(mgf_table)
    keep = lam > 0
    if np.count_nonzero(keep) < 3:
        raise ValueError("log-MGF table needs at least 3 nodes with lambda > 0")
    best = float(np.max(lam[keep] * t - psi[keep]))
    return math.exp(-max(best, 0.0))


def log_mgf_table(values, probs, lambdas) -> np.ndarray:
    """(lambda, log E exp(lambda X)) pairs for a finite discrete distribution."""
    values = np.asarray(values, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if values.shape != probs.shape or np.any(probs < 0) or not math.isclose(float(probs.sum()), 1.0, abs_tol=1e-12):
        raise ValueError("probabilities must be non-negative, sum to one and match the values")
    expo = lambdas[:, None] * values[None, :]
    top = np.max(expo, axis=1)
    psi = top + np.log(np.sum(probs[None, :] * np.exp(expo - top[:, None]), axis=1))
    return np.column_stack([lambdas, psi])


def sum_log_mgf(table, n: int) -> np.ndarray:
    """log-MGF table of a sum of n i.i.d. copies: the cumulants add."""
    lam, psi = _as_table(table)
    return np.column_stack([lam, n * psi])


def hoeffding_tail(ranges: Sequence[tuple[float, float]], t: float, sides: str = "one") -> float:
    """P(S >= t) <= exp(-2 t^2 / sum (b_i - a_i)^2) for S a centred sum of bounded terms.

    ``sides="two"`` bounds P(|S| >= t) and doubles the right-hand side.
    """
    _positive("t", t)
    if not ranges:
        raise ValueError("need at least one range")
    width2 = 0.0
    for a, b in ranges:
        if not b > a:
            raise ValueError(f"range ({a}, {b}) is empty")
        width2 += (b - a) ** 2
    bound = math.exp(-2.0 * t**2 / width2)
    if sides == "two":
        bound *= 2.0
    elif sides != "one":
        raise ValueError(f"sides must be 'one' or 'two', got {sides!r}")
    return _clip01(bound)


def hoeffding_log_mgf_bound(lam, a: float, b: float):
    """lambda^2 (b - a)^2 / 8, the cumulant bound for a centred variable in [a, b]."""
    return np.asarray(lam) ** 2 * (b - a) ** 2 / 8.0


def rff_min_D_hoeffding(n: int, eps: float, delta: float) -> int:
    """ceil(16 / eps^2 * log(n / delta)) random features.

    The union bound over n^2 pairs is already folded into the constant;
    the formula is returned as stated, not re-derived.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _positive("eps", eps)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(16.0 / eps**2 * math.log(n / delta)))


# --- matrix bounds ---------------------------------------------------------------


@dataclass(frozen=True)
class MatrixBernsteinQuery:
    n_summands: int
    L: float
    v: float
    d1: int
    d2: int

    def __post_init__(self):
        if self.n_summands < 1 or self.d1 < 1 or self.d2 < 1:
            raise ValueError("n_summands, d1 and d2 must be >= 1")
        _positive("L", self.L)
        if self.v < 0:
            raise ValueError(f"variance statistic must be non-negative, got {self.v}")


def bernstein_expectation_bound(q: MatrixBernsteinQuery) -> float:
    """E||Z|| <= sqrt(2 v log(d1 + d2)) + (L / 3) log(d1 + d2)."""
    lg = math.log(q.d1 + q.d2)
    return math.sqrt(2.0 * q.v * lg) + q.L / 3.0 * lg


def bernstein_tail_raw(q: MatrixBernsteinQuery, t: float) -> float:
    _positive("t", t)
    return (q.d1 + q.d2) * math.exp(-(t**2) / 2.0 / (q.v + q.L * t / 3.0))


def bernstein_tail_bound(q: MatrixBernsteinQuery, t: float) -> float:
    """P(||Z|| >= t) <= (d1 + d2) exp(-(t^2 / 2) / (v + L t / 3)), clipped to 1."""
    return _clip01(bernstein_tail_raw(q, t))


def hermitian_bernstein_expectation_bound(d: int, v: float, L: float) -> float:
    """E lambda_max(Y) <= sqrt(2 v log d) + (L / 3) log d for a d x d Hermitian sum."""
    lg = math.log(d)
    return math.sqrt(2.0 * v * lg) + L / 3.0 * lg


def hermitian_bernstein_tail_raw(d: int, v: float, L: float, t: float) -> float:
    _positive("t", t)
    return d * math.exp(-(t**2) / 2.0 / (v + L * t / 3.0))


def hermitian_bernstein_tail_bound(d: int, v: float, L: float, t: float) -> float:
    return _clip01(hermitian_bernstein_tail_raw(d, v, L, t))


@dataclass(frozen=True)
class SamplingBounds:
    expectation_bound: float
    tail_bound: Optional[float]
    query: MatrixBernsteinQuery


def sampling_estimator_bounds(
    m2: float, L: float, n: int, d1: int, d2: int, t: Optional[float] = None
) -> SamplingBounds:
    """Error of the average of n i.i.d. copies of R with ||R|| <= L and second moment m2.

    Equivalent to Matrix Bernstein applied to S_i = (R_i - E R) / n with
    ||S_i|| <= 2L / n and v(Z) <= m2 / n.
    """
    _positive("m2", m2)
    _positive("L", L)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lg = math.log(d1 + d2)
    expectation = math.sqrt(2.0 * m2 * lg / n) + 2.0 * L * lg / (3.0 * n)
    tail = None
    if t is not None:
        _positive("t", t)
        tail = _clip01((d1 + d2) * math.exp(-n * t**2 / 2.0 / (m2 + 2.0 * L * t / 3.0)))
    q = MatrixBernsteinQuery(n_summands=n, L=2.0 * L / n, v=m2 / n, d1=d1, d2=d2)
    return SamplingBounds(expectation, tail, q)


def rff_relative_error_bound(n: int, intdim: float, D: int) -> float:
    """Bound on E||R_D - G|| / ||G||: sqrt(4 r log(2n) / D) + 4 r log(2n) / (3 D), r = intdim."""
    x = 4.0 * intdim * math.log(2 * n) / D
    return math.sqrt(x) + x / 3.0


def rff_min_D_bernstein_real(n: int, intdim: float, eps: float, constant: float = 4.0) -> float:
    _check_bernstein_args(n, intdim, eps)
    return constant * math.log(2 * n) * intdim / eps**2


def _check_bernstein_args(n: int, intdim: float, eps: float) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1.0 - 1e-9 <= intdim <= n * (1.0 + 1e-9):
        raise ValueError(f"intrinsic dimension must lie in [1, n={n}], got {intdim}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def rff_min_D_bernstein(n: int, intdim: float, eps: float, statement_constant: bool = False) -> int:
    """ceil(4 log(2n) intdim / eps^2): expected relative spectral error at most 2 eps.

    ``statement_constant=True`` uses 16 in place of 4, the looser variant
    that targets error eps directly.
    """
    constant = 16.0 if statement_constant else 4.0
    return max(1, math.ceil(rff_min_D_bernstein_real(n, intdim, eps, constant)))


# --- Monte Carlo harness ---------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("need at least one trial")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, centre - half), min(1.0, centre + half)


def _run_chunked(fn: Callable[[Sequence[int]], np.ndarray], seeds: Sequence[int], threads: int) -> np.ndarray:
    """Apply ``fn`` to fixed-size seed chunks; chunking never depends on ``threads``."""
    chunks = [seeds[i : i + TRIAL_CHUNK] for i in range(0, len(seeds), TRIAL_CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def run_trials(sampler: Callable[[int], float], trials: int, seed: int, threads: int = 1) -> np.ndarray:
    """Statistic values from ``sampler(seed_i)`` with seed_i = mix(seed, i)."""
    seeds = rng.trial_seeds(seed, trials)
    return _run_chunked(lambda chunk: [float(sampler(s)) for s in chunk], seeds, threads)


@dataclass(frozen=True)
class EmpiricalTail:
    frequency: float
    wilson_interval: tuple[float, float]
    exceed: int
    trials: int
    values: np.ndarray = field(repr=False, compare=False)


def tail_from_values(values: np.ndarray, t: float, strict: bool = False) -> EmpiricalTail:
    values = np.asarray(values)
    hits = int(np.count_nonzero(values > t if strict else values >= t))
    return EmpiricalTail(hits / len(values), wilson_interval(hits, len(values)), hits, len(values), values)


def empirical_tail(
    sampler: Callable[[int], float], t: float, trials: int, seed: int = 0, threads: int = 1, strict: bool = False
) -> EmpiricalTail:
    """Frequency of ``statistic >= t`` (``> t`` if strict) over seeded trials, with a 99% Wilson interval."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    return tail_from_values(run_trials(sampler, trials, seed, threads), t, strict)


@dataclass(frozen=True)
class BoundReport:
    analytic_bound: float
    empirical_estimate: float
    trials: int
    verdict: str
    config_echo: dict
    wilson_99: Optional[tuple[float, float]] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config_echo,
            "analytic_bound": self.analytic_bound,
            "empirical": self.empirical_estimate,
            "trials": self.trials,
            "wilson_99": None if self.wilson_99 is None else list(self.wilson_99),
            "verdict": self.verdict,
        }


def tail_report(bound: float, tail: EmpiricalTail, config: dict) -> BoundReport:
    """'violated' only when the Wilson lower end exceeds the analytic bound."""
    verdict = "violated" if tail.wilson_interval[0] > bound else "consistent"
    return BoundReport(bound, tail.frequency, tail.trials, verdict, dict(config), tail.wilson_interval)


def mean_report(bound: float, values: np.ndarray, config: dict, confidence: float = CONFIDENCE) -> BoundReport:
    """Compare a sample mean to an expectation bound with a normal-approximation slack."""
    values = np.asarray(values, dtype=np.float64)
    mean = float(pairwise_sum(values)) / len(values)
    se = float(np.std(values, ddof=1)) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    interval = (mean - z * se, mean + z * se)
    verdict = "violated" if interval[0] > bound else "consistent"
    return BoundReport(bound, mean, len(values), verdict, dict(config), interval)


# --- RFF experiments -------------------------------------------------------------


def rff_pair_error(x, y, sigma: float, D: int) -> Callable[[int], float]:
    """Sampler of |estimate - k(x, y)| for a fresh feature map per seed."""
    pts = as_points([x, y]) if np.ndim(x) else as_points([[x], [y]])
    diff = pts[0] - pts[1]
    true = math.exp(-float(np.dot(diff, diff)) / (2.0 * sigma**2))

    def sample(seed: int) -> float:
        fm = sample_feature_map(pts.shape[1], D, sigma, seed)
        z = feature_matrix(fm, pts)
        return abs(float(pairwise_sum(z[0] * z[1])) / D - true)

    return sample


@dataclass(frozen=True)
class MatrixErrorResult:
    errors: np.ndarray  # ||R_D - G|| per trial
    mean: float
    gram_norm: float
    intdim: float

    @property
    def relative_errors(self) -> np.ndarray:
        return self.errors / self.gram_norm

    @property
    def mean_relative(self) -> float:
        return self.mean / self.gram_norm


def empirical_matrix_error(points, sigma: float, D: int, trials: int, seed: int, threads: int = 1) -> MatrixErrorResult:
    """Spectral error of the RFF Gram estimate against the exact Gaussian Gram, per trial."""
    if trials < 10:
        raise ValueError(f"need at least 10 trials, got {trials}")
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    pts = as_points(points)
    n, d = pts.shape
    g = exact_gaussian_gram(pts, sigma)
    gm = g.entries

    def chunk(seeds: Sequence[int]) -> np.ndarray:
        resid = np.empty((len(seeds), n, n))
        for i, s in enumerate(seeds):
            z = feature_matrix(sample_feature_map(d, D, sigma, s), pts)
            resid[i] = feature_products(z, z, D) - gm
        w = eigvalsh_batch(resid)
        return np.maximum(np.abs(w[:, 0]), np.abs(w[:, -1]))

    errors = _run_chunked(chunk, rng.trial_seeds(seed, trials), threads)
    mean = float(pairwise_sum(errors)) / trials
    return MatrixErrorResult(errors, mean, spectral_norm(g), intrinsic_dim(g))


def rff_bernstein_query(gram_norm: float, n: int, D: int) -> MatrixBernsteinQuery:
    """Matrix Bernstein parameters for Z = R_D - G.

    One RFF sample is R = z z^T with ||R|| = ||z||^2 <= 2n and
    ||E R^2|| <= 2n ||G||, so S_i = (R_i - G) / D has ||S_i|| <= 4n / D and
    v(Z) <= 2n ||G|| / D.
    """
    return sampling_estimator_bounds(m2=2.0 * n * gram_norm, L=2.0 * n, n=D, d1=n, d2=n).query

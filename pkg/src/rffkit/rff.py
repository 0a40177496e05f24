"""Random Fourier features for the Gaussian kernel exp(-||x - y||^2 / (2 sigma^2)).

Feature k of a point x is sqrt(2) cos(w_k . x + b_k) with w_k ~ N(0, I / sigma^2)
and b_k ~ Unif[0, 2 pi). The plain average of feature products over k is then
an unbiased estimate of the kernel.

Sampled parameters are regenerated from ``(seed, d, D, sigma)``; only those
four numbers are ever serialised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .kernels import Gaussian, KernelDomainError, KernelExpr, as_point, as_points, kernel_matrix
from .linalg import HermitianMatrix

TWO_PI = 2.0 * math.pi
_ROW_BLOCK = 16


def pairwise_sum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` by a fixed binary tree (fan-in 2), zero-padding odd levels."""
    a = np.moveaxis(np.asarray(a), axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1], dtype=a.dtype)
    while a.shape[-1] > 1:
        if a.shape[-1] % 2:
            a = np.concatenate([a, np.zeros(a.shape[:-1] + (1,), dtype=a.dtype)], axis=-1)
        a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0]


@dataclass(frozen=True)
class FeatureMap:
    input_dim: int
    feature_dim: int
    sigma: float
    seed: int
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)
    phases: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.input_dim < 1 or self.feature_dim < 1:
            raise ValueError("input_dim and feature_dim must be >= 1")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        k = np.arange(self.feature_dim, dtype=np.uint64)[:, None]
        j = np.arange(self.input_dim, dtype=np.uint64)[None, :]
        w = rng.normal(self.seed, k, j) / self.sigma
        b = TWO_PI * rng.uniform(self.seed, rng.STREAM_PHASE, k[:, 0])
        b = np.where(b < TWO_PI, b, np.nextafter(TWO_PI, 0.0))
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "phases", b)

    def to_dict(self) -> dict:
        return {"d": self.input_dim, "D": self.feature_dim, "sigma": self.sigma, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureMap":
        return cls(int(data["d"]), int(data["D"]), float(data["sigma"]), int(data["seed"]))

    @classmethod
    def from_json(cls, text: str) -> "FeatureMap":
        return cls.from_dict(json.loads(text))


def sample_feature_map(d: int, D: int, sigma: float, seed: int) -> FeatureMap:
    return FeatureMap(int(d), int(D), float(sigma), int(seed))


def feature_matrix(fm: FeatureMap, points) -> np.ndarray:
    """(n, D) matrix whose row i is the feature vector of point i."""
    x = as_points(points)
    if x.shape[1] != fm.input_dim:
        raise KernelDomainError(f"points have dimension {x.shape[1]}, feature map expects {fm.input_dim}")
    proj = np.sum(x[:, None, :] * fm.frequencies[None, :, :], axis=-1)
    return math.sqrt(2.0) * np.cos(proj + fm.phases[None, :])


def features(fm: FeatureMap, x) -> np.ndarray:
    x = as_point(x)
    if x.shape[0] != fm.input_dim:
        raise KernelDomainError(f"point has dimension {x.shape[0]}, feature map expects {fm.input_dim}")
    return feature_matrix(fm, x[None, :])[0]


@dataclass(frozen=True)
class RffEstimate:
    value: float
    kernel_true: float
    abs_error: float


def gaussian_value(x, y, sigma: float) -> float:
    diff = as_point(x) - as_point(y)
    return math.exp(-float(np.dot(diff, diff)) / (2.0 * sigma**2))


def estimate_pair(fm: FeatureMap, x, y) -> RffEstimate:
    zx, zy = features(fm, x), features(fm, y)
    value = float(pairwise_sum(zx * zy)) / fm.feature_dim
    true = gaussian_value(x, y, fm.sigma)
    return RffEstimate(value, true, abs(value - true))


def feature_products(zx: np.ndarray, zy: np.ndarray, D: int) -> np.ndarray:
    out = np.empty((zx.shape[0], zy.shape[0]))
    for s in range(0, zx.shape[0], _ROW_BLOCK):
        out[s : s + _ROW_BLOCK] = pairwise_sum(zx[s : s + _ROW_BLOCK, None, :] * zy[None, :, :]) / D
    return out


def estimate_gram(fm: FeatureMap, points) -> HermitianMatrix:
    """Z Z^T / D with Z the (n, D) feature matrix; PSD by construction."""
    z = feature_matrix(fm, points)
    return HermitianMatrix._trusted(feature_products(z, z, fm.feature_dim))


@dataclass(frozen=True)
class RffKernel(KernelExpr):
    """Kernel expression backed by a sampled feature map, for use wherever an exact kernel goes."""

    feature_map: FeatureMap

    def _check_dim(self, d):
        if d != self.feature_map.input_dim:
            raise KernelDomainError(f"points have dimension {d}, feature map expects {self.feature_map.input_dim}")

    def _matrix(self, x, y):
        zx = feature_matrix(self.feature_map, x)
        zy = feature_matrix(self.feature_map, y)
        return feature_products(zx, zy, self.feature_map.feature_dim)

    def to_text(self):
        fm = self.feature_map
        return f"rff(sigma={fm.sigma!r},D={fm.feature_dim},seed={fm.seed})"


def exact_gaussian_gram(points, sigma: float, threads: int = 1) -> HermitianMatrix:
    return HermitianMatrix(kernel_matrix(Gaussian(sigma), points, points, threads=threads))


def gaussian_fourier_quadrature(xi: float, gamma: float, nodes: int = 10_000, half_width: float = 10.0) -> complex:
    """(2 pi gamma^2)^(-1/2) * integral of exp(-i xi x) exp(-x^2 / (2 gamma^2)) over [-10 gamma, 10 gamma].

    Trapezoid rule; the closed form is exp(-gamma^2 xi^2 / 2).
    """
    x = np.linspace(-half_width * gamma, half_width * gamma, nodes)
    f = np.exp(-1j * xi * x) * np.exp(-(x**2) / (2.0 * gamma**2))
    return complex(np.trapezoid(f, x) / math.sqrt(TWO_PI * gamma**2))

"""Kernel expressions: built-in kernels, combinators and Gram matrices.

A :class:`KernelExpr` is an immutable tree. Leaves are the built-in kernels,
inner nodes are the closure operations that keep positive definiteness
(non-negative scaling, sums, Schur products, tensor products, exp) plus the
two bridges between c.n.d. and p.d. kernels (``Schoenberg`` and ``CndToPd``).

Every node evaluates on whole point sets at once through :meth:`matrix`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from numbers import Number
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import (
    DefinitenessVerdict,
    HermitianMatrix,
    NotHermitianError,
    check_cnd,
    check_pd,
    format_float,
)

GRAM_HERMITIAN_RTOL = 1e-10
_BLOCK = 128


class KernelDomainError(ValueError):
    """Points do not fit the kernel (dimension mismatch, Sinc on d > 1, ...)."""


def as_points(points) -> np.ndarray:
    """Coerce to an (n, d) float array. A flat sequence is read as n points in R^1."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise KernelDomainError(f"expected a non-empty (n, d) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise KernelDomainError("points must have finite coordinates")
    return arr


def as_point(x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise KernelDomainError(f"a point is a 1-D coordinate vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise KernelDomainError("point coordinates must be finite")
    return arr


def _sqdist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    return np.sum(diff * diff, axis=-1)


def _l1dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(x[:, None, :] - y[None, :, :]), axis=-1)


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # elementwise reduction rather than BLAS: values must not depend on blocking
    return np.sum(x[:, None, :] * y[None, :, :], axis=-1)


class KernelExpr:
    """Base class for kernel expression nodes."""

    def matrix(self, x, y) -> np.ndarray:
        """Kernel values k(x_i, y_j) as an (n, m) array."""
        x, y = as_points(x), as_points(y)
        if x.shape[1] != y.shape[1]:
            raise KernelDomainError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
        self._check_dim(x.shape[1])
        return self._matrix(x, y)

    def __call__(self, x, y) -> complex:
        return eval_kernel(self, x, y)

    def _matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_dim(self, d: int) -> None:
        pass

    @property
    def hermitian(self) -> bool:
        return True

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()

    def __add__(self, other):
        if isinstance(other, KernelExpr):
            return Sum((self, other))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, KernelExpr):
            return SchurProduct((self, other))
        if isinstance(other, Number) and not isinstance(other, complex):
            return Scale(float(other), self)
        return NotImplemented

    __rmul__ = __mul__


def _num(v) -> str:
    if isinstance(v, complex):
        if v.imag == 0:
            return format_float(v.real)
        sign = "+" if v.imag >= 0 else "-"
        return f"{format_float(v.real)}{sign}{format_float(abs(v.imag))}j"
    if isinstance(v, int):
        return str(v)
    return format_float(v)


@dataclass(frozen=True)
class DotProduct(KernelExpr):
    def _matrix(self, x, y):
        return _dot(x, y)

    def to_text(self):
        return "dot"


@dataclass(frozen=True)
class Polynomial(KernelExpr):
    c: float = 1.0
    p: int = 2

    def __post_init__(self):
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 1:
            raise ValueError(f"polynomial degree must be an integer >= 1, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    def _matrix(self, x, y):
        return (_dot(x, y) + self.c) ** self.p

    def to_text(self):
        return f"poly(c={_num(self.c)},p={self.p})"


@dataclass(frozen=True)
class Gaussian(KernelExpr):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def _matrix(self, x, y):
        return np.exp(-_sqdist(x, y) / (2.0 * self.sigma**2))

    def to_text(self):
        return f"gaussian(sigma={_num(self.sigma)})"


@dataclass(frozen=True)
class Laplacian(KernelExpr):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def _matrix(self, x, y):
        return np.exp(-_l1dist(x, y) / self.sigma)

    def to_text(self):
        return f"laplacian(sigma={_num(self.sigma)})"


@dataclass(frozen=True)
class Sinc(KernelExpr):
    """sin(a(x - y)) / (pi (x - y)) on the real line, a / pi on the diagonal."""

    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"sinc parameter a must be positive, got {self.a}")

    def _check_dim(self, d):
        if d != 1:
            raise KernelDomainError(f"sinc kernel is defined on 1-D points only, got d={d}")

    def _matrix(self, x, y):
        diff = x[:, None, 0] - y[None, :, 0]
        out = np.full(diff.shape, self.a / math.pi)
        nz = diff != 0
        out[nz] = np.sin(self.a * diff[nz]) / (math.pi * diff[nz])
        return out

    def to_text(self):
        return f"sinc(a={_num(self.a)})"


@dataclass(frozen=True)
class SquaredDistance(KernelExpr):
    def _matrix(self, x, y):
        return _sqdist(x, y)

    def to_text(self):
        return "sqdist"


@dataclass(frozen=True)
class L1Distance(KernelExpr):
    def _matrix(self, x, y):
        return _l1dist(x, y)

    def to_text(self):
        return "l1dist"


@dataclass(frozen=True)
class ConstantKernel(KernelExpr):
    value: complex = 1.0

    def _matrix(self, x, y):
        v = self.value
        if isinstance(v, complex) and v.imag == 0:
            v = v.real
        return np.full((x.shape[0], y.shape[0]), v)

    @property
    def hermitian(self):
        return complex(self.value).imag == 0

    def to_text(self):
        return f"const({_num(self.value)})"


@dataclass(frozen=True, eq=False)
class FromFunction(KernelExpr):
    """User callback ``func(x, y) -> complex`` evaluated pair by pair.

    ``hermitian`` is the caller's declaration; Gram construction checks it
    and reports violations instead of symmetrising.
    """

    func: Callable[[np.ndarray, np.ndarray], complex]
    is_hermitian: bool = True
    name: str = "fn"

    def _matrix(self, x, y):
        vals = [[self.func(xi, yj) for yj in y] for xi in x]
        arr = np.array(vals)
        if np.iscomplexobj(arr) and not np.any(arr.imag):
            arr = arr.real
        return arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)

    @property
    def hermitian(self):
        return self.is_hermitian

    def to_text(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class Scale(KernelExpr):
    alpha: float
    child: KernelExpr

    def _check_dim(self, d):
        self.child._check_dim(d)

    def _matrix(self, x, y):
        return self.alpha * self.child._matrix(x, y)

    @property
    def hermitian(self):
        return self.child.hermitian

    def to_text(self):
        return f"scale({_num(self.alpha)},{self.child.to_text()})"


@dataclass(frozen=True)
class Sum(KernelExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("sum needs at least one kernel")

    def _check_dim(self, d):
        for c in self.children:
            c._check_dim(d)

    def _matrix(self, x, y):
        out = self.children[0]._matrix(x, y)
        for c in self.children[1:]:
            out = out + c._matrix(x, y)
        return out

    @property
    def hermitian(self):
        return all(c.hermitian for c in self.children)

    def to_text(self):
        return "sum(" + ",".join(c.to_text() for c in self.children) + ")"


@dataclass(frozen=True)
class SchurProduct(KernelExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("prod needs at least one kernel")

    def _check_dim(self, d):
        for c in self.children:
            c._check_dim(d)

    def _matrix(self, x, y):
        out = self.children[0]._matrix(x, y)
        for c in self.children[1:]:
            out = out * c._matrix(x, y)
        return out

    @property
    def hermitian(self):
        return all(c.hermitian for c in self.children)

    def to_text(self):
        return "prod(" + ",".join(c.to_text() for c in self.children) + ")"


@dataclass(frozen=True)
class TensorProduct(KernelExpr):
    """left on the first ``split`` coordinates times right on the rest."""

    left: KernelExpr
    right: KernelExpr
    split: int

    def _check_dim(self, d):
        if not 1 <= self.split < d:
            raise KernelDomainError(f"tensor split {self.split} out of range for d={d}")
        self.left._check_dim(self.split)
        self.right._check_dim(d - self.split)

    def _matrix(self, x, y):
        s = self.split
        return self.left._matrix(x[:, :s], y[:, :s]) * self.right._matrix(x[:, s:], y[:, s:])

    @property
    def hermitian(self):
        return self.left.hermitian and self.right.hermitian

    def to_text(self):
        return f"tensor({self.left.to_text()},{self.right.to_text()},split={self.split})"


@dataclass(frozen=True)
class ExpCompose(KernelExpr):
    child: KernelExpr

    def _check_dim(self, d):
        self.child._check_dim(d)

    def _matrix(self, x, y):
        return np.exp(self.child._matrix(x, y))

    @property
    def hermitian(self):
        return self.child.hermitian

    def to_text(self):
        return f"exp({self.child.to_text()})"


@dataclass(frozen=True)
class Schoenberg(KernelExpr):
    """exp(-t * psi(x, y))."""

    t: float
    child: KernelExpr

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"Schoenberg parameter t must be positive, got {self.t}")

    def _check_dim(self, d):
        self.child._check_dim(d)

    def _matrix(self, x, y):
        return np.exp(-self.t * self.child._matrix(x, y))

    @property
    def hermitian(self):
        return self.child.hermitian

    def to_text(self):
        return f"schoenberg({_num(self.t)},{self.child.to_text()})"


@dataclass(frozen=True)
class CndToPd(KernelExpr):
    """psi(x, x0) + conj(psi(y, x0)) - psi(x, y) - psi(x0, x0)."""

    child: KernelExpr
    anchor: tuple
    anchor_label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(float(v) for v in as_point(self.anchor)))

    def _check_dim(self, d):
        if len(self.anchor) != d:
            raise KernelDomainError(f"anchor has dimension {len(self.anchor)}, points have {d}")
        self.child._check_dim(d)

    def _matrix(self, x, y):
        x0 = np.array(self.anchor)[None, :]
        kx = self.child._matrix(x, x0)[:, 0]
        ky = self.child._matrix(y, x0)[:, 0]
        k00 = self.child._matrix(x0, x0)[0, 0]
        return kx[:, None] + np.conj(ky)[None, :] - self.child._matrix(x, y) - k00

    @property
    def hermitian(self):
        return self.child.hermitian

    def to_text(self):
        label = self.anchor_label if self.anchor_label is not None else "[" + ",".join(_num(v) for v in self.anchor) + "]"
        return f"cnd2pd({self.child.to_text()},anchor={label})"


# --- operations -------------------------------------------------------------------


def eval_kernel(k: KernelExpr, x, y) -> complex:
    """k(x, y) for two single points."""
    x, y = as_point(x), as_point(y)
    if x.shape != y.shape:
        raise KernelDomainError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return complex(k.matrix(x[None, :], y[None, :])[0, 0])


def kernel_matrix(k: KernelExpr, x, y, threads: int = 1) -> np.ndarray:
    """Cross-kernel matrix, evaluated in fixed row blocks (optionally in threads)."""
    x, y = as_points(x), as_points(y)
    if x.shape[1] != y.shape[1]:
        raise KernelDomainError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    k._check_dim(x.shape[1])
    starts = list(range(0, x.shape[0], _BLOCK))

    def block(s: int) -> np.ndarray:
        return np.asarray(k._matrix(x[s : s + _BLOCK], y))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(s) for s in starts]
    return np.concatenate(parts, axis=0)


def gram(k: KernelExpr, points, threads: int = 1) -> HermitianMatrix:
    """Gram matrix G_jk = k(x_j, x_k); raises if the result is not Hermitian."""
    g = kernel_matrix(k, points, points, threads=threads)
    scale = max(1.0, float(np.max(np.abs(g))))
    asym = float(np.max(np.abs(g - g.conj().T)))
    if asym > GRAM_HERMITIAN_RTOL * scale:
        raise NotHermitianError(
            f"Gram matrix of {k.to_text()} is not Hermitian (max|G - G*| = {asym:.3e})"
        )
    return HermitianMatrix(g, rtol=GRAM_HERMITIAN_RTOL)


def certify_pd(k: KernelExpr, points, tol: Optional[float] = None, threads: int = 1) -> DefinitenessVerdict:
    """Positive definiteness of ``k`` restricted to ``points`` (evidence, not proof, for the full domain)."""
    return check_pd(gram(k, points, threads=threads), tol)


def certify_cnd(k: KernelExpr, points, tol: Optional[float] = None, threads: int = 1) -> DefinitenessVerdict:
    pts = as_points(points)
    if pts.shape[0] < 2:
        raise ValueError("c.n.d. certification needs at least 2 points")
    return check_cnd(gram(k, pts, threads=threads), tol)


def schoenberg_transform(psi: KernelExpr, t: float) -> KernelExpr:
    return Schoenberg(t, psi)


def cnd_to_pd(psi: KernelExpr, anchor) -> KernelExpr:
    return CndToPd(psi, anchor)


def exp_compose(phi: KernelExpr) -> KernelExpr:
    return ExpCompose(phi)


def tensor_product(k1: KernelExpr, k2: KernelExpr, split: int) -> KernelExpr:
    if split < 1:
        raise KernelDomainError(f"tensor split must be >= 1, got {split}")
    return TensorProduct(k1, k2, split)


def leaf_kernels(k: KernelExpr) -> Sequence[KernelExpr]:
    """All nodes of the expression tree, depth first."""
    out = [k]
    for attr in ("child", "left", "right"):
        sub = getattr(k, attr, None)
        if isinstance(sub, KernelExpr):
            out.extend(leaf_kernels(sub))
    for sub in getattr(k, "children", ()):
        out.extend(leaf_kernels(sub))
    return out

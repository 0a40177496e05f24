"""Finite RKHS functions f = sum_j c_j k(x_j, .) and Mercer feature maps of Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import KernelExpr, as_point, as_points, gram, kernel_matrix
from .linalg import Definiteness, HermitianMatrix, as_hermitian, check_pd, eigh

CLAMP_RTOL = 1e-8


class KernelMismatchError(ValueError):
    pass


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RkhsFunction:
    kernel: KernelExpr
    anchors: np.ndarray  # (n, d)
    coeffs: np.ndarray  # (n,) complex

    def __post_init__(self):
        anchors = as_points(self.anchors)
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
        if coeffs.ndim != 1 or coeffs.shape[0] != anchors.shape[0]:
            raise ValueError(f"{anchors.shape[0]} anchors but {coeffs.shape[0]} coefficients")
        anchors.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "coeffs", coeffs)

    def __add__(self, other: "RkhsFunction") -> "RkhsFunction":
        _same_kernel(self, other)
        return RkhsFunction(
            self.kernel,
            np.concatenate([self.anchors, other.anchors]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __mul__(self, scalar) -> "RkhsFunction":
        return RkhsFunction(self.kernel, self.anchors, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __sub__(self, other: "RkhsFunction") -> "RkhsFunction":
        return self + (-1.0) * other

    def __call__(self, y) -> complex:
        return rkhs_eval(self, y)


def section(kernel: KernelExpr, x) -> RkhsFunction:
    """The kernel section k(x, .) as an RKHS function."""
    return RkhsFunction(kernel, as_point(x)[None, :], np.ones(1))


def _same_kernel(f: RkhsFunction, g: RkhsFunction) -> None:
    if f.kernel != g.kernel:
        raise KernelMismatchError(f"kernels differ: {f.kernel.to_text()} vs {g.kernel.to_text()}")


def rkhs_inner(f: RkhsFunction, g: RkhsFunction) -> complex:
    """<f, g> = sum_{j,k} c_j conj(d_k) k(x_j, y_k); linear in f, conjugate-linear in g."""
    _same_kernel(f, g)
    km = kernel_matrix(f.kernel, f.anchors, g.anchors)
    return complex(f.coeffs @ km @ np.conj(g.coeffs))


def rkhs_eval(f: RkhsFunction, y) -> complex:
    y = as_point(y)
    return complex(f.coeffs @ kernel_matrix(f.kernel, f.anchors, y[None, :])[:, 0])


def rkhs_norm(f: RkhsFunction, rtol: float = 1e-12) -> float:
    """Square root of <f, f>.

    The form is only a semi-inner product for degenerate kernels, so a zero
    norm on a nonzero f is allowed. A clearly negative <f, f> means the
    kernel is not p.d. on the anchors and raises.
    """
    val = rkhs_inner(f, f)
    scale = max(1.0, float(np.sum(np.abs(f.coeffs))) ** 2 * float(np.max(np.abs(gram(f.kernel, f.anchors).entries))))
    if abs(val.imag) > rtol * scale:
        raise NotPositiveDefiniteError(f"<f, f> has imaginary part {val.imag:.3e}; kernel is not Hermitian")
    if val.real < -1e-10 * scale:
        raise NotPositiveDefiniteError(f"<f, f> = {val.real:.3e} < 0; kernel is not p.d. on these anchors")
    return float(np.sqrt(max(val.real, 0.0)))


@dataclass(frozen=True, eq=False)
class MercerMap:
    """Rows of ``features`` are vectors whose inner products reproduce ``source_gram``."""

    points: Optional[np.ndarray]
    features: np.ndarray
    source_gram: HermitianMatrix

    def reconstruct(self) -> np.ndarray:
        f = self.features
        return f @ f.conj().T

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.reconstruct() - self.source_gram.entries)))


def mercer_factorize(g, points=None) -> MercerMap:
    """Factor a PSD Gram matrix as F F* via its eigen-decomposition.

    Eigenvalues in [-1e-8 ||G||, 0) are clamped to zero; anything more
    negative raises :class:`NotPositiveDefiniteError`.
    """
    h = as_hermitian(g)
    dec = eigh(h)
    norm = max(abs(dec.eigenvalues[0]), abs(dec.eigenvalues[-1]))
    floor = -CLAMP_RTOL * norm
    if dec.eigenvalues[0] < floor:
        raise NotPositiveDefiniteError(
            f"Gram matrix is not p.d.: smallest eigenvalue {dec.eigenvalues[0]:.3e} < {floor:.3e}"
        )
    lam = np.clip(dec.eigenvalues, 0.0, None)
    feats = dec.eigenvectors * np.sqrt(lam)[None, :]
    pts = None if points is None else as_points(points)
    return MercerMap(pts, feats, h)


def mercer_map_for_kernel(kernel: KernelExpr, points) -> MercerMap:
    pts = as_points(points)
    return mercer_factorize(gram(kernel, pts), pts)


def is_pd_on(kernel: KernelExpr, points) -> bool:
    return check_pd(gram(kernel, points)).kind is not Definiteness.NOT_PD


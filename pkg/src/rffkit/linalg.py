"""Dense Hermitian matrices, a Jacobi eigensolver and definiteness checks.

Everything here works on small dense matrices (n up to a few thousand).
Real symmetric input stays real; complex input is handled as Hermitian.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

MAX_SWEEPS = 30
HERMITIAN_RTOL = 1e-12


class NotHermitianError(ValueError):
    pass


class ConvergenceError(np.linalg.LinAlgError):
    """Jacobi iteration ran out of sweeps; ``residual`` is the off-diagonal norm left."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi eigensolver did not converge in {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


class HermitianMatrix:
    """Immutable dense Hermitian matrix.

    ``entries`` is a read-only float64 array for real symmetric input and a
    complex128 array otherwise. Asymmetry up to ``1e-12 * max|entry|`` is
    averaged away; anything larger raises :class:`NotHermitianError`.
    """

    __slots__ = ("_a",)

    def __init__(self, entries, rtol: float = HERMITIAN_RTOL):
        a = np.array(entries, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if np.iscomplexobj(a):
            a = a.astype(np.complex128)
            if not np.any(a.imag):
                a = a.real.copy()
        else:
            a = a.astype(np.float64)
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        asym = float(np.max(np.abs(a - a.conj().T)))
        if asym > rtol * scale:
            raise NotHermitianError(
                f"matrix is not Hermitian: max|A - A*| = {asym:.3e} > {rtol:g} * {scale:.3e}"
            )
        a = 0.5 * (a + a.conj().T)
        a.flags.writeable = False
        self._a = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "HermitianMatrix":
        # caller guarantees exact Hermitian symmetry
        obj = cls.__new__(cls)
        a = np.array(a, copy=True)
        if np.iscomplexobj(a) and not np.any(a.imag):
            a = a.real.copy()
        a.flags.writeable = False
        obj._a = a
        return obj

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self._a)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._a, dtype=dtype)

    def __neg__(self) -> "HermitianMatrix":
        return HermitianMatrix._trusted(-self._a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self):
        return hash((self._a.shape, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim}, real={self.is_real})"


MatrixLike = Union[HermitianMatrix, np.ndarray]


def as_hermitian(a) -> HermitianMatrix:
    return a if isinstance(a, HermitianMatrix) else HermitianMatrix(a)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # unitary, columns

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T


# --- Jacobi eigensolver ---------------------------------------------------------


@lru_cache(maxsize=64)
def _rotation_schedule(n: int) -> tuple:
    """Round-robin tournament: n-1 rounds of disjoint (p, q) pairs covering all pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _offdiag_norm(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[..., mask]) ** 2, axis=-1))


def _jacobi(a: np.ndarray, want_vectors: bool = True, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi on a stack of Hermitian matrices of shape (B, n, n).

    Each round applies n/2 disjoint rotations at once, so the update is
    vectorised over both the batch and the rotation set. The result is a pure
    function of the input.
    """
    a = np.array(a, copy=True)
    bsz, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=a.dtype), a.shape).copy() if want_vectors else None
    fro = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    thresh = 1e-14 * fro
    schedule = _rotation_schedule(n)
    bidx = np.arange(bsz)[:, None]
    off = _offdiag_norm(a)
    sweeps = 0
    while np.any(off > thresh):
        if sweeps >= max_sweeps:
            raise ConvergenceError(float(np.max(off)), sweeps)
        for p, q in schedule:
            app = a[:, p, p].real
            aqq = a[:, q, q].real
            apq = a[:, p, q]
            mag = np.abs(apq)
            live = mag > 0
            safe = np.where(live, mag, 1.0)
            phase = np.where(live, np.conj(apq) / safe, 1.0)
            with np.errstate(over="ignore"):
                # a subnormal a_pq gives theta = inf and hence t = 0, the right limit
                theta = np.where(live, (aqq - app) / (2.0 * safe), 0.0)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(live, t, 0.0)
            cs = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * cs
            jpp, jpq = cs, sn
            jqp, jqq = -sn * phase, cs * phase

            # A <- A J
            cp = a[:, :, p]
            cq = a[:, :, q]
            a[:, :, p] = cp * jpp[:, None, :] + cq * jqp[:, None, :]
            a[:, :, q] = cp * jpq[:, None, :] + cq * jqq[:, None, :]
            # A <- J* A
            rp = a[:, p, :]
            rq = a[:, q, :]
            a[:, p, :] = np.conj(jpp)[:, :, None] * rp + np.conj(jqp)[:, :, None] * rq
            a[:, q, :] = np.conj(jpq)[:, :, None] * rp + np.conj(jqq)[:, :, None] * rq
            a[bidx, p, q] = 0.0
            a[bidx, q, p] = 0.0
            if v is not None:
                vp = v[:, :, p]
                vq = v[:, :, q]
                v[:, :, p] = vp * jpp[:, None, :] + vq * jqp[:, None, :]
                v[:, :, q] = vp * jpq[:, None, :] + vq * jqq[:, None, :]
        sweeps += 1
        off = _offdiag_norm(a)
    w = np.einsum("...ii->...i", a).real.copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if v is not None:
        v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w, v


def eigh(a: MatrixLike) -> EigenDecomposition:
    """Eigen-decomposition ``A = Q diag(w) Q*`` with ``w`` ascending."""
    h = as_hermitian(a)
    w, v = _jacobi(h.entries[None, :, :])
    return EigenDecomposition(w[0], v[0])


def eigvalsh(a: MatrixLike) -> np.ndarray:
    h = as_hermitian(a)
    w, _ = _jacobi(h.entries[None, :, :], want_vectors=False)
    return w[0]


def eigvalsh_batch(stack: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues for each matrix of a (B, n, n) Hermitian stack.

    No validation is done; the caller supplies exactly Hermitian matrices.
    """
    stack = np.asarray(stack)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected a (B, n, n) stack, got {stack.shape}")
    w, _ = _jacobi(stack, want_vectors=False)
    return w


# --- norms and functionals ------------------------------------------------------


def spectral_norm(a: MatrixLike) -> float:
    """max(|lambda_min|, |lambda_max|) of a Hermitian matrix."""
    w = eigvalsh(a)
    return float(max(abs(w[0]), abs(w[-1])))


def operator_norm(b) -> float:
    """Largest singular value of an arbitrary matrix, via eigenvalues of B*B."""
    b = np.asarray(b)
    if b.ndim != 2 or b.size == 0:
        raise ValueError("expected a non-empty 2-D matrix")
    gram = b.conj().T @ b if b.shape[1] <= b.shape[0] else b @ b.conj().T
    gram = 0.5 * (gram + gram.conj().T)
    w = _jacobi(gram[None], want_vectors=False)[0][0]
    return float(np.sqrt(max(w[-1], 0.0)))


def frobenius_norm(m) -> float:
    m = np.asarray(m)
    return float(np.sqrt(np.sum(np.abs(m) ** 2)))


def trace(m) -> complex:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace needs a square matrix, got shape {m.shape}")
    return complex(np.sum(np.diagonal(m)))


def default_tol(a: MatrixLike) -> float:
    return 1e-8 * max(1.0, spectral_norm(a))


# --- definiteness ----------------------------------------------------------------


class Definiteness(str, enum.Enum):
    STRICTLY_PD = "strictly-pd"
    PD = "pd"
    NOT_PD = "not-pd"
    CND = "cnd"
    NOT_CND = "not-cnd"


@dataclass(frozen=True)
class DefinitenessVerdict:
    kind: Definiteness
    min_eigenvalue: float
    tol: float
    witness: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.kind in (Definiteness.STRICTLY_PD, Definiteness.PD, Definiteness.CND)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "min_eigenvalue": self.min_eigenvalue, "tol": self.tol}
        if self.witness is not None:
            w = self.witness
            out["witness"] = (
                [[float(z.real), float(z.imag)] for z in w] if np.iscomplexobj(w) else [float(z) for z in w]
            )
        return out


def check_pd(a: MatrixLike, tol: Optional[float] = None) -> DefinitenessVerdict:
    """Classify A as strictly p.d., p.d. (PSD) or not p.d.

    A failing verdict carries the eigenvector of the smallest eigenvalue as a
    coefficient vector c with c* A c < -tol.
    """
    h = as_hermitian(a)
    dec = eigh(h)
    lam = float(dec.eigenvalues[0])
    if tol is None:
        tol = 1e-8 * max(1.0, abs(lam), abs(float(dec.eigenvalues[-1])))
    if lam > tol:
        return DefinitenessVerdict(Definiteness.STRICTLY_PD, lam, tol)
    if lam >= -tol:
        return DefinitenessVerdict(Definiteness.PD, lam, tol)
    return DefinitenessVerdict(Definiteness.NOT_PD, lam, tol, dec.eigenvectors[:, 0].copy())


def centering_projector(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def check_cnd(a: MatrixLike, tol: Optional[float] = None) -> DefinitenessVerdict:
    """Conditional negative definiteness: c* A c <= 0 for every c with sum(c) = 0.

    Reduced to an eigenproblem on P A P with P the centering projector.
    ``min_eigenvalue`` is reported for -PAP, matching :func:`check_pd`.
    """
    h = as_hermitian(a)
    n = h.dim
    if n < 2:
        raise ValueError("conditional negative definiteness needs n >= 2")
    p = centering_projector(n)
    pap = p @ h.entries @ p
    pap = 0.5 * (pap + pap.conj().T)
    dec = eigh(HermitianMatrix._trusted(pap))
    top = float(dec.eigenvalues[-1])
    if tol is None:
        tol = 1e-8 * max(1.0, abs(top), abs(float(dec.eigenvalues[0])))
    if top <= tol:
        return DefinitenessVerdict(Definiteness.CND, -top, tol)
    c = p @ dec.eigenvectors[:, -1]
    c = c / np.linalg.norm(c)
    return DefinitenessVerdict(Definiteness.NOT_CND, -top, tol, c)


def sylvester_strict_pd(a: MatrixLike, tol: Optional[float] = None) -> bool:
    """Strict positive definiteness from the leading principal minors.

    Runs symmetric elimination without pivoting. The k-th pivot is the ratio
    of the k-th to the (k-1)-th leading minor, so all minors are positive
    exactly when all pivots are; each pivot must exceed ``tol``.
    """
    h = as_hermitian(a)
    if tol is None:
        tol = default_tol(h)
    m = np.array(h.entries, dtype=np.result_type(h.entries, np.float64), copy=True)
    n = h.dim
    for k in range(n):
        pivot = float(m[k, k].real)
        if not pivot > tol:
            return False
        if k + 1 < n:
            m[k + 1 :, k + 1 :] -= np.outer(m[k + 1 :, k], m[k, k + 1 :]) / pivot
    return True


def leading_minors(a: MatrixLike) -> np.ndarray:
    """Leading principal minors det(A[:p, :p]) for p = 1..n, by the same elimination."""
    h = as_hermitian(a)
    m = np.array(h.entries, dtype=np.result_type(h.entries, np.float64), copy=True)
    n = h.dim
    out = np.zeros(n)
    det = 1.0
    for k in range(n):
        pivot = float(m[k, k].real)
        det *= pivot
        out[k] = det
        if pivot == 0.0:
            # later minors need pivoting; fall back to direct determinants
            for j in range(k + 1, n):
                out[j] = float(np.linalg.det(h.entries[: j + 1, : j + 1]).real)
            return out
        if k + 1 < n:
            m[k + 1 :, k + 1 :] -= np.outer(m[k + 1 :, k], m[k, k + 1 :]) / pivot
    return out


def schur_product(a: MatrixLike, b: MatrixLike) -> HermitianMatrix:
    ha, hb = as_hermitian(a), as_hermitian(b)
    if ha.dim != hb.dim:
        raise ValueError(f"dimension mismatch: {ha.dim} vs {hb.dim}")
    return HermitianMatrix._trusted(ha.entries * hb.entries)


def psd_sqrt(a: MatrixLike) -> HermitianMatrix:
    dec = eigh(a)
    w = np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    q = dec.eigenvectors
    s = (q * w) @ q.conj().T
    return HermitianMatrix._trusted(0.5 * (s + s.conj().T))


def stable_rank(b) -> float:
    """||B||_F^2 / ||B||^2, always in [1, rank B]."""
    b = np.asarray(b.entries if isinstance(b, HermitianMatrix) else b)
    fro = frobenius_norm(b)
    if fro == 0.0:
        raise ValueError("stable rank of the zero matrix is undefined")
    return fro**2 / operator_norm(b) ** 2


def intrinsic_dim(a: MatrixLike, tol: Optional[float] = None) -> float:
    """tr(A) / ||A|| for a positive semidefinite A."""
    h = as_hermitian(a)
    verdict = check_pd(h, tol)
    if verdict.kind is Definiteness.NOT_PD:
        raise ValueError(f"intrinsic dimension needs a p.d. matrix (min eigenvalue {verdict.min_eigenvalue:.3e})")
    norm = spectral_norm(h)
    if norm == 0.0:
        raise ValueError("intrinsic dimension of the zero matrix is undefined")
    return trace(h.entries).real / norm


# --- CSV exchange format ---------------------------------------------------------


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix_csv(m, fh=None) -> str:
    """Write a matrix as CSV: n real columns, or 2n interleaved (re, im) columns if complex."""
    m = np.asarray(m.entries if isinstance(m, HermitianMatrix) else m)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in m:
        if np.iscomplexobj(m):
            writer.writerow([format_float(v) for z in row for v in (z.real, z.imag)])
        else:
            writer.writerow([format_float(z) for z in row])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_matrix_csv(fh) -> np.ndarray:
    """Inverse of :func:`write_matrix_csv`; square shape decides real vs interleaved."""
    rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError("empty matrix file")
    n = len(rows)
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"row {i + 1} has {len(r)} columns, expected {width}")
    try:
        vals = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"non-numeric matrix entry: {exc}") from None
    if width == n:
        return vals
    if width == 2 * n:
        return vals[:, 0::2] + 1j * vals[:, 1::2]
    raise ValueError(f"{n} rows need {n} or {2 * n} columns, got {width}")

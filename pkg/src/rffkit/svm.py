"""Kernel SVM dual:  maximise sum(a) - 1/2 sum_ij y_i y_j a_i a_j K_ij
subject to a >= 0 (a <= C for a soft margin) and sum(a * y) = 0.

Solved by SMO with maximal-violating-pair selection. Each step moves one
pair (a_i, a_j) along the equality constraint, so feasibility is kept
exactly and the objective never decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .kernels import KernelExpr, as_point, as_points, gram, kernel_matrix
from .linalg import HermitianMatrix

TAU = 1e-12
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000

KernelLike = Union[KernelExpr, HermitianMatrix, np.ndarray]


@dataclass(frozen=True, eq=False)
class TrainingSet:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        y = np.asarray(self.labels, dtype=np.float64).ravel()
        if y.shape[0] != pts.shape[0]:
            raise ValueError(f"{pts.shape[0]} points but {y.shape[0]} labels")
        if pts.shape[0] < 2:
            raise ValueError("need at least two training points")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        if not (np.any(y > 0) and np.any(y < 0)):
            raise ValueError("both classes must be present")
        pts.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class DualSolution:
    alphas: np.ndarray
    bias: float
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    C: float = math.inf
    history: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "bias": self.bias,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "C": None if math.isinf(self.C) else self.C,
        }


def _train_gram(ts: TrainingSet, k: KernelLike) -> np.ndarray:
    if isinstance(k, KernelExpr):
        g = gram(k, ts.points).entries
    else:
        g = np.asarray(k.entries if isinstance(k, HermitianMatrix) else k)
    if g.shape != (len(ts), len(ts)):
        raise ValueError(f"kernel matrix has shape {g.shape}, expected {(len(ts), len(ts))}")
    if np.iscomplexobj(g):
        if np.any(np.abs(g.imag) > 1e-12 * max(1.0, float(np.max(np.abs(g))))):
            raise ValueError("SVM needs a real kernel matrix")
        g = g.real
    return np.asarray(g, dtype=np.float64)


def dual_objective(ts: TrainingSet, k: KernelLike, alphas) -> float:
    a = np.asarray(alphas, dtype=np.float64)
    if a.shape != (len(ts),):
        raise ValueError(f"expected {len(ts)} multipliers, got shape {a.shape}")
    if np.any(a < 0):
        raise ValueError("multipliers must be non-negative")
    g = _train_gram(ts, k)
    ay = a * ts.labels
    return float(np.sum(a) - 0.5 * ay @ g @ ay)


def _violating_pair(alpha, grad, y, C):
    # -y_t G_t over the index sets that can still move up / down
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    s_up = np.where(up, score, -np.inf)
    s_low = np.where(low, score, np.inf)
    i = int(np.argmax(s_up))
    j = int(np.argmin(s_low))
    return i, j, float(s_up[i]), float(s_low[j])


def solve_dual(
    ts: TrainingSet,
    k: KernelLike,
    C: float = math.inf,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    record_history: bool = False,
) -> DualSolution:
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    y = ts.labels
    g = _train_gram(ts, k)
    q = (y[:, None] * y[None, :]) * g
    qd = np.diag(q).copy()
    n = len(ts)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    history = [0.0] if record_history else None
    it = 0
    m_up, m_low = _violating_pair(alpha, grad, y, C)[2:]
    while m_up - m_low > tol and it < max_iter:
        i, j, m_up, m_low = _violating_pair(alpha, grad, y, C)
        if m_up - m_low <= tol:
            break
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = qd[i] + qd[j] + 2.0 * q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = qd[i] + qd[j] - 2.0 * q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        grad += q[:, i] * (ni - ai) + q[:, j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj
        it += 1
        if history is not None:
            history.append(float(np.sum(alpha) - 0.5 * alpha @ q @ alpha))
    i, j, m_up, m_low = _violating_pair(alpha, grad, y, C)
    residual = max(0.0, m_up - m_low)
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(np.mean(-y[free] * grad[free]))
    else:
        bias = 0.5 * (m_up + m_low)
    objective = float(np.sum(alpha) - 0.5 * alpha @ q @ alpha)
    return DualSolution(
        alphas=alpha,
        bias=bias,
        objective=objective,
        kkt_residual=residual,
        iterations=it,
        converged=residual <= tol,
        C=C,
        history=None if history is None else np.array(history),
    )


def decision_values(sol: DualSolution, ts: TrainingSet, k: KernelExpr, x) -> np.ndarray:
    """sum_i a_i y_i k(x_i, x) + b for each row of ``x``."""
    km = kernel_matrix(k, ts.points, as_points(x))
    if np.iscomplexobj(km):
        km = km.real
    return (sol.alphas * ts.labels) @ km + sol.bias


def predict(sol: DualSolution, ts: TrainingSet, k: KernelExpr, x) -> int:
    """Sign of the decision value; an exact zero goes to +1."""
    val = decision_values(sol, ts, k, as_point(x)[None, :])[0]
    return 1 if val >= 0 else -1


def predict_many(sol: DualSolution, ts: TrainingSet, k: KernelExpr, x) -> np.ndarray:
    return np.where(decision_values(sol, ts, k, x) >= 0, 1, -1)


def rkhs_weight_norm_sq(sol: DualSolution, ts: TrainingSet, k: KernelLike) -> float:
    """||w||_H^2 = sum_ij a_i a_j y_i y_j K_ij; the hard margin is 1 / sqrt of this."""
    g = _train_gram(ts, k)
    ay = sol.alphas * ts.labels
    return float(ay @ g @ ay)


def training_accuracy(sol: DualSolution, ts: TrainingSet, k: KernelExpr) -> float:
    return float(np.mean(predict_many(sol, ts, k, ts.points) == ts.labels))

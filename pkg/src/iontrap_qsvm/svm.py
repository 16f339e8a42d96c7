"""Binary SVM on a precomputed kernel.

The dual problem

    min  1/2 sum_ij a_i a_j l_i l_j K_ij - sum_i a_i
    s.t. 0 <= a_i <= C,  sum_i a_i l_i = 0

is solved with SMO: each step picks the maximal-violating pair (first-order
working-set selection) and solves the two-variable subproblem in closed form.
The bias averages l_s - sum_m a_m l_m K_ms over all support vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError, ShapeError, TrainingError

DEFAULT_C = 1.0
TOL = 1e-6
MAX_ITER = 100_000
TAU = 1e-12  # curvature floor for non-positive-definite pairs


@dataclass
class SvmModel:
    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    C: float
    support_indices: list[int] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if not self.support_indices:
            self.support_indices = support_set(self.alphas, self.C)

    def decision_values(self, cross_kernel) -> np.ndarray:
        k = np.atleast_2d(np.asarray(getattr(cross_kernel, "entries", cross_kernel), dtype=float))
        if k.shape[1] != len(self.alphas):
            raise ShapeError(f"kernel rows have {k.shape[1]} entries, model has {len(self.alphas)} samples")
        s = self.support_indices
        coef = self.alphas[s] * self.labels[s]
        return k[:, s] @ coef + self.bias

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "labels": self.labels.tolist(),
            "support_indices": list(self.support_indices),
            "bias": self.bias,
            "C": self.C,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> SvmModel:
        return cls(np.array(d["alphas"], dtype=float), np.array(d["labels"], dtype=int),
                   float(d["bias"]), float(d["C"]), [int(i) for i in d["support_indices"]])

    @classmethod
    def from_json(cls, text: str) -> SvmModel:
        return cls.from_dict(json.loads(text))


def support_set(alphas: np.ndarray, C: float) -> list[int]:
    return [int(i) for i in np.flatnonzero(alphas > 1e-8 * C)]


def dual_objective(alphas, labels, gram) -> float:
    ya = np.asarray(alphas) * np.asarray(labels)
    return float(0.5 * ya @ np.asarray(gram) @ ya - np.sum(alphas))


def _violation(grad, y, alpha, C):
    """(i, j, m - M): maximal violating pair and the KKT gap."""
    minus_yg = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    cand_up = np.where(up, minus_yg, -np.inf)
    cand_low = np.where(low, minus_yg, np.inf)
    i = int(np.argmax(cand_up))
    j = int(np.argmin(cand_low))
    return i, j, float(cand_up[i] - cand_low[j])


def train(gram, labels, C: float = DEFAULT_C, tol: float = TOL, max_iter: int = MAX_ITER) -> SvmModel:
    """Fit the dual coefficients and bias for a precomputed Gram matrix."""
    k = np.asarray(getattr(gram, "entries", gram), dtype=float)
    y = np.asarray(labels, dtype=float)
    L = len(y)
    if k.shape != (L, L):
        raise ShapeError(f"Gram matrix {k.shape} does not match {L} labels")
    if not np.all(np.isfinite(k)):
        raise DataError("kernel contains non-finite entries")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise TrainingError("labels must be +1 or -1")
    if len(set(y)) < 2:
        raise TrainingError("training labels contain a single class")
    if C <= 0:
        raise TrainingError(f"C must be positive, got {C}")
    k = (k + k.T) / 2
    q = np.outer(y, y) * k

    alpha = np.zeros(L)
    grad = -np.ones(L)  # Q alpha - 1
    for it in range(max_iter):
        i, j, gap = _violation(grad, y, alpha, C)
        if gap < tol:
            break
        # move along d_i = y_i t, d_j = -y_j t keeps sum(y alpha) fixed
        curv = q[i, i] + q[j, j] - 2 * y[i] * y[j] * q[i, j]
        curv = max(curv, TAU)
        t = gap / curv
        # box limits for t from alpha_i + y_i t and alpha_j - y_j t
        hi_i = C - alpha[i] if y[i] > 0 else alpha[i]
        hi_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t, hi_i, hi_j)
        di, dj = y[i] * t, -y[j] * t
        alpha[i] += di
        alpha[j] += dj
        # snap to the box to keep the active sets exact
        for idx in (i, j):
            if alpha[idx] < 1e-14 * C:
                alpha[idx] = 0.0
            elif alpha[idx] > C * (1 - 1e-14):
                alpha[idx] = C
        grad += q[:, i] * di + q[:, j] * dj
    else:
        raise ConvergenceError(f"SMO did not converge in {max_iter} iterations (gap {gap:.3g})")

    support = support_set(alpha, C)
    coef = alpha[support] * y[support]
    if support:
        residual = y[support] - k[np.ix_(support, support)] @ coef
        bias = float(np.mean(residual))
    else:
        bias = 0.0
    diagnostics = {
        "iterations": it,
        "kkt_gap": gap,
        "objective": dual_objective(alpha, y, k),
        "min_eigenvalue": float(np.min(np.linalg.eigvalsh(k))),
    }
    return SvmModel(alpha, y.astype(int), bias, float(C), support, diagnostics)


def decision_value(model: SvmModel, cross_kernel_row) -> float:
    row = np.asarray(getattr(cross_kernel_row, "entries", cross_kernel_row), dtype=float)
    if row.ndim != 1:
        raise ShapeError("expected a single kernel row")
    return float(model.decision_values(row)[0])


def predict(model: SvmModel, cross_kernel_row) -> int:
    """Label of one test sample; a zero decision value maps to +1."""
    return 1 if decision_value(model, cross_kernel_row) >= 0 else -1


def predict_all(model: SvmModel, cross_kernel) -> np.ndarray:
    return np.where(model.decision_values(cross_kernel) >= 0, 1, -1)


def accuracy(model: SvmModel, cross_kernel, true_labels) -> float:
    true_labels = np.asarray(true_labels)
    k = np.asarray(getattr(cross_kernel, "entries", cross_kernel), dtype=float)
    if len(true_labels) == 0:
        raise DataError("accuracy of an empty sample set is undefined")
    if k.ndim != 2 or k.shape[0] != len(true_labels):
        raise ShapeError(f"kernel shape {k.shape} does not match {len(true_labels)} labels")
    return float(np.mean(predict_all(model, k) == true_labels))


__all__ = [
    "SvmModel", "train", "predict", "predict_all", "decision_value", "accuracy",
    "dual_objective", "support_set",
]

"""Soft-margin RBF support vector machines trained by SMO, combined one-vs-all.

The kernel follows the divide-by-scale convention
``K(x, y) = exp(-||(x - y) / s||^2)`` with ``s = kernel_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EstimationError

KKT_TOL = 1e-3
MAX_ITER = 1_000_000
TAU = 1e-12


def rbf_kernel(A, B, kernel_scale):
    A = np.atleast_2d(A) / kernel_scale
    B = np.atleast_2d(B) / kernel_scale
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-np.maximum(d2, 0.0))


@dataclass
class BinarySvm:
    support: np.ndarray  # support vectors, (n_sv, d)
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    iterations: int

    def decision(self, X, kernel_scale):
        if self.support.shape[0] == 0:
            return np.full(np.atleast_2d(X).shape[0], self.bias)
        return rbf_kernel(X, self.support, kernel_scale) @ self.coef + self.bias

    def to_dict(self):
        return {"support": self.support.tolist(), "coef": self.coef.tolist(), "bias": self.bias, "iterations": self.iterations}

    @classmethod
    def from_dict(cls, d):
        sv = np.asarray(d["support"], dtype=float)
        return cls(sv.reshape(len(d["coef"]), -1), np.asarray(d["coef"], dtype=float), float(d["bias"]), int(d["iterations"]))


def smo(K, y, C, tol=KKT_TOL, max_iter=MAX_ITER):
    """Solve the C-SVM dual with second-order working-set selection.

    Returns ``(alpha, bias, iterations)``; the decision function is
    ``sum_i alpha_i y_i K(x_i, x) + bias``.
    """
    n = y.size
    y = y.astype(float)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K)
    for it in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not np.any(up) or not np.any(low):
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        m_up = yg[i]
        m_low = np.min(yg[low])
        if m_up - m_low < tol:
            break
        cand = low & (yg < m_up)
        b = m_up - yg[cand]
        a = diag[i] + diag[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        # two-variable subproblem, as in LIBSVM
        yi, yj = y[i], y[j]
        aij = max(K[i, i] + K[j, j] - 2.0 * K[i, j], TAU)
        old_i, old_j = alpha[i], alpha[j]
        if yi != yj:
            delta = (-grad[i] - grad[j]) / aij
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / aij
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += Q[:, i] * (ai - old_i) + Q[:, j] * (aj - old_j)
    else:
        raise EstimationError(f"SMO did not reach KKT tolerance {tol} in {max_iter} iterations")

    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = -np.mean(yg[free])
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = np.max(yg[up]) if np.any(up) else 0.0
        lo = np.min(yg[low]) if np.any(low) else 0.0
        rho = -(hi + lo) / 2.0
    return alpha, -rho, it


def train_binary(X, y, C, kernel_scale) -> BinarySvm:
    K = rbf_kernel(X, X, kernel_scale)
    alpha, bias, it = smo(K, y, C)
    sv = alpha > 0
    return BinarySvm(X[sv].copy(), alpha[sv] * y[sv], float(bias), it)


def train_one_vs_all(X, y, n_classes, C, kernel_scale) -> list[BinarySvm]:
    return [train_binary(X, np.where(y == c, 1, -1), C, kernel_scale) for c in range(n_classes)]

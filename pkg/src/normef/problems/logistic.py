"""Binary logistic regression with the saturating nonconvex regularizer.

Client ``i`` owns a block of rows and minimizes the average logistic loss
over its rows plus ``lam * sum_j x_j^2 / (1 + x_j^2)``. With one row per
client this is exactly the per-sample formulation; ``f`` is always the
plain average of the client objectives.
"""
from __future__ import annotations

import math

import numpy as np

from ..core import RngStream, check_dim
from .base import Problem, SmoothnessConstants
from .data import Dataset, shard


def _loss(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(-z)) without overflow."""
    return np.logaddexp(0.0, -z)


def _neg_sigmoid(z: np.ndarray) -> np.ndarray:
    """exp(-z) / (1 + exp(-z)), evaluated on the branch that cannot overflow."""
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, e, 1.0) / (1.0 + e)


def _reg_value(lam: float, x: np.ndarray) -> float:
    x2 = x * x
    return lam * float(np.sum(x2 / (1.0 + x2)))


def _reg_grad(lam: float, x: np.ndarray) -> np.ndarray:
    q = 1.0 + x * x
    return 2.0 * lam * x / q / q


class LogisticProblem(Problem):
    def __init__(self, data: Dataset, lam: float, n_clients: int | None = None):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if data.n == 0:
            raise ValueError("empty dataset")
        self.data = data
        self.A = data.features
        self.b = data.labels
        self.lam = float(lam)
        self.dim = data.d
        self.shards = shard(data, data.n if n_clients is None else n_clients)
        self.n_clients = len(self.shards)
        self._starts = np.array([rows[0] for rows in self.shards])
        self._sizes = np.array([len(rows) for rows in self.shards], dtype=np.float64)

    def _rows_grad(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        A = self.A[rows]
        b = self.b[rows]
        s = _neg_sigmoid(b * (A @ x))
        return -(A.T @ (s * b)) / len(rows)

    def client_value(self, i, x):
        self._check_client(i)
        check_dim(x, self.dim)
        rows = self.shards[i]
        z = self.b[rows] * (self.A[rows] @ x)
        return float(np.mean(_loss(z))) + _reg_value(self.lam, x)

    def value(self, x):
        check_dim(x, self.dim)
        losses = _loss(self.b * (self.A @ x))
        per_client = np.add.reduceat(losses, self._starts) / self._sizes
        return float(np.mean(per_client)) + _reg_value(self.lam, x)

    def client_grad(self, i, x):
        self._check_client(i)
        check_dim(x, self.dim)
        return self._rows_grad(self.shards[i], x) + _reg_grad(self.lam, x)

    def client_grads(self, x):
        check_dim(x, self.dim)
        reg = _reg_grad(self.lam, x)
        return [self._rows_grad(rows, x) + reg for rows in self.shards]

    def stochastic_grad(self, i, x, batch=1, rng: RngStream | None = None, sigma=0.0):
        """Minibatch gradient over ``batch`` of the client's rows, drawn without replacement.

        A batch covering the whole shard returns the exact client gradient.
        ``sigma`` is unused (the noise comes from sampling).
        """
        self._check_client(i)
        rows = self.shards[i]
        if batch < 1:
            raise ValueError("batch must be positive")
        if batch > len(rows):
            raise ValueError(f"batch {batch} exceeds shard size {len(rows)}")
        if batch == len(rows):
            return self.client_grad(i, x)
        check_dim(x, self.dim)
        pick = rows[np.sort(rng.choice(len(rows), batch))]
        return self._rows_grad(pick, x) + _reg_grad(self.lam, x)

    def constants(self) -> SmoothnessConstants:
        return logistic_constants(self)


def logistic_value(p: LogisticProblem, x: np.ndarray) -> float:
    return p.value(x)


def logistic_grad_client(p: LogisticProblem, client: int, x: np.ndarray) -> np.ndarray:
    return p.client_grad(client, x)


def logistic_constants(p: LogisticProblem) -> SmoothnessConstants:
    """Classical and (L0, L1) constants from the row norms and spectral norm."""
    A = p.A
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    lam = p.lam
    row_norms = np.linalg.norm(A, axis=1)
    L = np.linalg.norm(A, 2) ** 2 / (4.0 * n) + 2.0 * lam
    L_hat = tuple(
        float(np.linalg.norm(A[rows], 2) ** 2 / (4.0 * len(rows)) + 2.0 * lam) for rows in p.shards
    )
    L1 = float(row_norms.max())
    L0 = 2.0 * lam + lam * math.sqrt(p.dim) * L1
    return SmoothnessConstants(L0=L0, L1=L1, L=float(L), L_hat=L_hat)

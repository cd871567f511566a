"""Nonconvex separable quartic with a saturating quadratic regularizer.

    f(x) = sum_j a_j x_j^4 + lam * sum_j x_j^2 / (1 + x_j^2)

With ``a_j = lam / 24`` the Hessian is indefinite at ``x = (+-1, ..., +-1)``
and ``f`` is (L0, L1)-smooth for any ``L1 > 0`` with
``L0 = 9 lam d^2 / (2 L1^2) + 2 lam``. On the box ``|x_j| <= D`` it is also
classically smooth with ``L = lam sqrt(d) D^2 / 2 + 2 lam``.
"""
from __future__ import annotations

import math

import numpy as np

from ..core import RngStream, check_dim
from .base import Problem, SmoothnessConstants


def poly_constants(d: int, L1: float, L0_target: float):
    """Pick ``lam`` so that the generalized constants are ``(L0_target, L1)``.

    Returns ``(lam, coeffs, SmoothnessConstants)``; ``L`` is left unset.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if L1 <= 0 or L0_target <= 0:
        raise ValueError("L1 and L0_target must be positive")
    lam = L0_target / (9.0 * d * d / (2.0 * L1 * L1) + 2.0)
    coeffs = np.full(d, lam / 24.0)
    return lam, coeffs, SmoothnessConstants(L0=float(L0_target), L1=float(L1))


class PolynomialProblem(Problem):
    """Every client holds the same objective, so ``f_i = f`` and ``f_i^inf = 0``."""

    f_inf = 0.0

    def __init__(self, d: int, lam: float, coeffs=None, n_clients: int = 1,
                 L0: float | None = None, L1: float | None = None):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        self.dim = int(d)
        self.lam = float(lam)
        self.coeffs = np.full(d, lam / 24.0) if coeffs is None else np.asarray(coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.dim,) or np.any(self.coeffs <= 0):
            raise ValueError("coeffs must be d positive numbers")
        self.n_clients = int(n_clients)
        self.f_inf_clients = (0.0,) * self.n_clients
        self.L0 = L0
        self.L1 = L1

    @classmethod
    def from_smoothness(cls, d: int, L0: float, L1: float, n_clients: int = 1) -> "PolynomialProblem":
        lam, coeffs, _ = poly_constants(d, L1, L0)
        return cls(d, lam, coeffs, n_clients=n_clients, L0=L0, L1=L1)

    def f(self, x: np.ndarray) -> float:
        check_dim(x, self.dim)
        x2 = x * x
        return float(self.coeffs @ (x2 * x2) + self.lam * (x2 / (1.0 + x2)).sum())

    def gradient(self, x: np.ndarray) -> np.ndarray:
        check_dim(x, self.dim)
        x2 = x * x
        q = 1.0 + x2
        return 4.0 * self.coeffs * x2 * x + 2.0 * self.lam * x / (q * q)

    def client_value(self, i, x):
        self._check_client(i)
        return self.f(x)

    def client_grad(self, i, x):
        self._check_client(i)
        return self.gradient(x)

    def value(self, x):
        return self.f(x)

    def grad(self, x):
        return self.gradient(x)

    def client_grads(self, x):
        g = self.gradient(x)
        return [g] + [g.copy() for _ in range(self.n_clients - 1)]

    def stochastic_grad(self, i, x, batch=1, rng: RngStream | None = None, sigma=0.0):
        """Exact gradient plus N(0, sigma^2/d) noise per coordinate (variance sigma^2)."""
        g = self.client_grad(i, x)
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if sigma == 0:
            return g
        return g + (sigma / math.sqrt(self.dim)) * rng.normal(self.dim)

    def smoothness_L(self, D: float) -> float:
        return poly_L_from_D(self, D)

    def constants(self, D: float | None = None) -> SmoothnessConstants:
        if self.L0 is None or self.L1 is None:
            raise ValueError("generalized constants were not set")
        L = poly_L_from_D(self, D) if D is not None else None
        L_hat = (L,) * self.n_clients if L is not None else ()
        return SmoothnessConstants(L0=self.L0, L1=self.L1, L=L, L_hat=L_hat, D=D)


def poly_L_from_D(p: PolynomialProblem, D: float) -> float:
    """Classical smoothness constant on the box ``|x_j| <= D``."""
    if D <= 0:
        raise ValueError("D must be positive")
    return p.lam * math.sqrt(p.dim) * D * D / 2.0 + 2.0 * p.lam


def estimate_D(x0: np.ndarray) -> float:
    """Box radius taken from the starting point."""
    return float(np.max(np.abs(x0)))

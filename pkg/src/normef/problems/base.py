from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream


@dataclass(frozen=True)
class SmoothnessConstants:
    """Classical and generalized smoothness constants of a problem.

    ``L`` may be ``None`` until it can be computed (the polynomial's ``L``
    depends on the box radius ``D``).
    """

    L0: float
    L1: float
    L: float | None = None
    L_hat: tuple[float, ...] = field(default=())
    D: float | None = None

    @property
    def L_tilde(self) -> float:
        """Quadratic mean of the per-client constants."""
        if not self.L_hat:
            raise ValueError("per-client constants are not available")
        return math.sqrt(sum(v * v for v in self.L_hat) / len(self.L_hat))


class Problem:
    """``f(x) = (1/n) sum_i f_i(x)`` split over ``n_clients`` clients.

    Subclasses provide ``client_value``, ``client_grad`` and
    ``stochastic_grad``; the global value and gradient are client averages
    reduced in fixed client order.
    """

    dim: int
    n_clients: int
    #: infimum of f, when known in closed form
    f_inf: float | None = None
    #: per-client infima, when known
    f_inf_clients: tuple[float, ...] | None = None

    def client_value(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def client_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def stochastic_grad(self, i: int, x: np.ndarray, batch: int, rng: RngStream,
                        sigma: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def value(self, x: np.ndarray) -> float:
        return sum(self.client_value(i, x) for i in range(self.n_clients)) / self.n_clients

    def client_grads(self, x: np.ndarray) -> list[np.ndarray]:
        return [self.client_grad(i, x) for i in range(self.n_clients)]

    def grad(self, x: np.ndarray) -> np.ndarray:
        return mean_vectors(self.client_grads(x))

    def _check_client(self, i: int) -> None:
        if not 0 <= i < self.n_clients:
            raise IndexError(f"unknown client {i} (have {self.n_clients})")


def mean_vectors(vs: list[np.ndarray]) -> np.ndarray:
    """Average in list order: left-to-right sum, then one division."""
    total = vs[0].copy()
    if len(vs) == 1:
        return total
    for v in vs[1:]:
        total += v
    return total / len(vs)

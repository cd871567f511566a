"""Stepsize and momentum rules for the normalized and classical methods.

All rules are resolved once the horizon ``K`` is known and stay constant
over the run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class StepsizeError(ValueError):
    pass


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise StepsizeError(f"alpha must lie in (0, 1], got {alpha}")


def compression_multiplier(alpha: float) -> float:
    """1/2 + 2 sqrt(1-alpha) / (1 - sqrt(1-alpha))."""
    _check_alpha(alpha)
    r = math.sqrt(1.0 - alpha)
    return 0.5 + 2.0 * r / (1.0 - r)


def c_constants(L0: float, L1: float, alpha: float) -> tuple[float, float]:
    m = compression_multiplier(alpha)
    return m * L0, m * L1


def C_alpha(alpha: float) -> float:
    _check_alpha(alpha)
    return 1.0 - math.sqrt(1.0 - alpha)


def ef21_theta_beta(alpha: float) -> tuple[float, float]:
    """theta = 1 - sqrt(1-alpha), beta = (1-alpha) / (1 - sqrt(1-alpha))."""
    theta = C_alpha(alpha)
    return theta, (1.0 - alpha) / theta


def normalized_sqrtK_stepsize(gamma0: float, K: int) -> float:
    if gamma0 <= 0:
        raise StepsizeError("gamma0 must be positive")
    if K < 0:
        raise StepsizeError("K must be nonnegative")
    return gamma0 / math.sqrt(K + 1)


def single_node_stepsize(L1: float, alpha: float, beta: float = 2.0) -> float:
    """gamma = 1 / (beta * c1); ``beta >= 2``."""
    if beta < 2:
        raise StepsizeError(f"beta must be at least 2, got {beta}")
    if L1 <= 0:
        raise StepsizeError("L1 must be positive")
    _, c1 = c_constants(0.0, L1, alpha)
    return 1.0 / (beta * c1)


def ef21_classical_stepsize(L: float, Ltilde: float, alpha: float) -> float:
    """gamma = 1 / (L + Ltilde sqrt(beta/theta)) for non-normalized EF21."""
    if L <= 0 or Ltilde <= 0:
        raise StepsizeError("L and Ltilde must be positive")
    theta, beta = ef21_theta_beta(alpha)
    return 1.0 / (L + Ltilde * math.sqrt(beta / theta))


def sgdm_gamma0_cap(K: int, L1: float, alpha: float) -> float:
    """Largest admissible gamma0: min(sqrt(K+1) C_alpha, 1) / (16 L1)."""
    if L1 <= 0:
        raise StepsizeError("L1 must be positive")
    return min(math.sqrt(K + 1) * C_alpha(alpha), 1.0) / (16.0 * L1)


def sgdm_stepsizes(gamma0: float, K: int, L1: float, alpha: float,
                   clamp: bool = False) -> tuple[float, float]:
    """(gamma, eta) = (gamma0 / (K+1)^(3/4), (K+1)^(-1/2)).

    ``gamma0`` above the cap is rejected unless ``clamp`` is set, in which
    case it is lowered to the cap.
    """
    if K < 0:
        raise StepsizeError("K must be nonnegative")
    if gamma0 <= 0:
        raise StepsizeError("gamma0 must be positive")
    cap = sgdm_gamma0_cap(K, L1, alpha)
    if gamma0 > cap:
        if not clamp:
            raise StepsizeError(f"gamma0={gamma0} exceeds the admissible cap {cap}")
        gamma0 = cap
    return gamma0 / (K + 1) ** 0.75, 1.0 / math.sqrt(K + 1)


@dataclass(frozen=True)
class TheoryConstants:
    c0: float
    c1: float
    C_alpha: float
    B: float | None
    theta: float
    beta: float


def theory_constants(L0: float, L1: float, alpha: float, n: int = 1,
                     f_inf: float | None = None,
                     f_inf_clients: tuple[float, ...] | None = None) -> TheoryConstants:
    """Derived constants; ``B`` only when all infima are known."""
    c0, c1 = c_constants(L0, L1, alpha)
    theta, beta = ef21_theta_beta(alpha)
    B = None
    if f_inf is not None and f_inf_clients is not None:
        B = 2.0 * c0 + 8.0 * L1 * c1 * sum(f_inf - fi for fi in f_inf_clients) / n
    return TheoryConstants(c0, c1, theta, B, theta, beta)


# Rule descriptors ---------------------------------------------------------

@dataclass(frozen=True)
class NormalizedSqrtK:
    gamma0: float = 1.0

    def resolve(self, K, **_):
        return normalized_sqrtK_stepsize(self.gamma0, K), None


@dataclass(frozen=True)
class SingleNodeConstant:
    beta: float = 2.0

    def resolve(self, K, *, L1, alpha, **_):
        return single_node_stepsize(L1, alpha, self.beta), None


@dataclass(frozen=True)
class EF21Classical:
    def resolve(self, K, *, L, Ltilde, alpha, **_):
        return ef21_classical_stepsize(L, Ltilde, alpha), None


@dataclass(frozen=True)
class SgdmRule:
    gamma0: float
    clamp: bool = False

    def resolve(self, K, *, L1, alpha, **_):
        return sgdm_stepsizes(self.gamma0, K, L1, alpha, self.clamp)


@dataclass(frozen=True)
class ConstantStep:
    """Fixed (gamma, eta); used by tests and reference comparisons."""

    gamma: float
    eta: float | None = None

    def resolve(self, K, **_):
        if self.gamma <= 0:
            raise StepsizeError("gamma must be positive")
        if self.eta is not None and not 0 < self.eta <= 1:
            raise StepsizeError("eta must lie in (0, 1]")
        return self.gamma, self.eta


StepsizeRule = NormalizedSqrtK | SingleNodeConstant | EF21Classical | SgdmRule | ConstantStep

from .base import Problem, SmoothnessConstants, mean_vectors
from .data import (
    Dataset,
    LibsvmFormatError,
    format_libsvm,
    generate_synthetic,
    load_libsvm,
    parse_libsvm,
    save_libsvm,
    scale_features,
    shard,
)
from .logistic import LogisticProblem, logistic_constants, logistic_grad_client, logistic_value
from .polynomial import PolynomialProblem, estimate_D, poly_constants, poly_L_from_D


def poly_value(p: PolynomialProblem, x):
    return p.f(x)


def poly_grad(p: PolynomialProblem, x):
    return p.gradient(x)


def stochastic_grad(p: Problem, client: int, x, batch: int, rng, sigma: float = 0.0):
    return p.stochastic_grad(client, x, batch, rng, sigma)


__all__ = [
    "Dataset",
    "LibsvmFormatError",
    "LogisticProblem",
    "PolynomialProblem",
    "Problem",
    "SmoothnessConstants",
    "estimate_D",
    "format_libsvm",
    "generate_synthetic",
    "load_libsvm",
    "logistic_constants",
    "logistic_grad_client",
    "logistic_value",
    "mean_vectors",
    "parse_libsvm",
    "poly_L_from_D",
    "poly_constants",
    "poly_grad",
    "poly_value",
    "save_libsvm",
    "scale_features",
    "shard",
    "stochastic_grad",
]

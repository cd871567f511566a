"""Numerical checks of the smoothness, compression and descent inequalities.

Each check reports its worst margin (bound minus observed quantity); a
negative margin below the tolerance is a failure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..algorithms import run
from ..compressors import compress
from ..core import RngStream, norm2
from ..problems import PolynomialProblem
from ..schedules import c_constants
from .config import ExperimentConfig
from .experiment import algorithm_rng, build

TOL = 1e-9
_CHECK_STREAM = 30


@dataclass
class CheckResult:
    name: str
    passed: bool | None
    margin: float = math.nan
    detail: str = ""

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "SKIP"}[self.passed]


@dataclass
class CheckReport:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.results)

    def __getitem__(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def format(self) -> str:
        lines = []
        for r in self.results:
            margin = "" if math.isnan(r.margin) else f" margin={r.margin:.6g}"
            lines.append(f"{r.status} {r.name}{margin} {r.detail}".rstrip())
        return "\n".join(lines)


def _result(name: str, margin: float, tol: float = TOL, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(margin >= -tol), float(margin), detail)


def finite_diff_grad(problem, i: int, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of ``f_i`` at ``x``, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    g = np.empty_like(x, dtype=np.float64)
    for j in range(x.shape[0]):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        g[j] = (problem.client_value(i, xp) - problem.client_value(i, xm)) / (2.0 * h)
    return g


def generalized_smoothness_margin(problem, i: int, x: np.ndarray, y: np.ndarray, L0: float,
                                  L1: float, grid: int = 50) -> float:
    """Bound minus ``||grad f_i(x) - grad f_i(y)||``, sup taken over a ``grid``-point segment."""
    lhs = norm2(problem.client_grad(i, x) - problem.client_grad(i, y))
    sup = max(norm2(problem.client_grad(i, t * x + (1 - t) * y)) for t in np.linspace(0, 1, grid))
    bound = (L0 + L1 * sup) * norm2(x - y) * (1 + 1e-6)
    return bound - lhs


def gradient_domination_margin(problem, i: int, x: np.ndarray, L0: float, L1: float,
                               fi_inf: float) -> float:
    """``f_i(x) - f_i^inf - ||grad f_i||^2 / (4 (L0 + L1 ||grad f_i||))``."""
    g = norm2(problem.client_grad(i, x))
    return problem.client_value(i, x) - fi_inf - g * g / (4.0 * (L0 + L1 * g))


def grad_norm_bound_margin(problem, x: np.ndarray, L0: float, L1: float, f_inf: float,
                           f_inf_clients) -> float:
    n = problem.n_clients
    lhs = sum(norm2(g) for g in problem.client_grads(x)) / n
    rhs = (8 * L1 * (problem.value(x) - f_inf)
           + 8 * L1 * sum(f_inf - fi for fi in f_inf_clients) / n + L0 / L1)
    return rhs - lhs


def contractivity_margins(kind, vectors, rng: RngStream, draws: int = 1) -> np.ndarray:
    """Per-vector ``(1 - alpha) ||v||^2 * slack - mean ||C(v) - v||^2``.

    With ``draws > 1`` the mean is empirical over independent applications
    and ``slack = 1 + 3 / sqrt(draws)`` allows for its sampling error;
    a single draw uses ``slack = 1``.
    """
    slack = 1.0 + 3.0 / math.sqrt(draws) if draws > 1 else 1.0
    out = []
    for j, v in enumerate(vectors):
        alpha = kind.alpha(v.shape[0])
        stream = rng.child(j)
        errs = [float(np.sum((compress(kind, v, stream) - v) ** 2)) for _ in range(draws)]
        out.append((1 - alpha) * float(v @ v) * slack - float(np.mean(errs)))
    return np.asarray(out)


def descent_margins(trace: dict, gamma: float, L0: float, L1: float) -> np.ndarray:
    f = np.append(trace["f"], trace["f_final"])
    rhs = (f[:-1] - gamma * trace["grad_norm"] + 2 * gamma * trace["memory_error"]
           + gamma**2 / 2 * math.exp(gamma * L1) * (L0 + L1 * trace["mean_client_grad_norm"]))
    return rhs - f[1:]


def lyapunov_series(trace: dict, gamma: float, alpha: float, f_inf: float) -> np.ndarray:
    theta = 1 - math.sqrt(1 - alpha)
    return trace["f"] - f_inf + 2 * gamma / theta * trace["mean_client_memory_error"]


def lyapunov_margins(trace: dict, gamma: float, alpha: float, L0: float, L1: float,
                     f_inf: float) -> np.ndarray:
    """Margins of ``V^{k+1} <= V^k + c1 e^{L1 g} g^2 mean||grad f_i|| - g ||grad f|| + c0 e^{L1 g} g^2``."""
    V = lyapunov_series(trace, gamma, alpha, f_inf)
    c0, c1 = c_constants(L0, L1, alpha)
    e = math.exp(L1 * gamma)
    rhs = (V[:-1] + c1 * e * gamma**2 * trace["mean_client_grad_norm"][:-1]
           - gamma * trace["grad_norm"][:-1] + c0 * e * gamma**2)
    return rhs - V[1:]


def _sample_points(setup, trace, rng: RngStream, count: int) -> list[np.ndarray]:
    """Points near visited iterates (or near ``x0`` when no trace is available)."""
    d = setup.problem.dim
    g = rng.generator
    if trace:
        base = trace["x"]
    else:
        base = [setup.x0]
    scale = max(1.0, float(np.max(np.abs(setup.x0))))
    pts = []
    for t in range(count):
        b = base[int(g.integers(len(base)))]
        spread = scale if t % 4 == 0 else 1.0
        pts.append(b + spread * g.standard_normal(d))
    return pts


def check_suite(cfg: ExperimentConfig, samples: int = 1000, L0: float | None = None,
                L1: float | None = None, K: int | None = None) -> CheckReport:
    """Run every applicable check for ``cfg``.

    ``L0``/``L1`` override the computed constants (to probe a deliberately
    wrong constant).
    """
    cfg.validate()
    setup = build(cfg)
    problem = setup.problem
    L0 = setup.constants["L0"] if L0 is None else L0
    L1 = setup.constants["L1"] if L1 is None else L1
    algo = cfg.algo_config()
    rng = RngStream(cfg.run.seed).child(_CHECK_STREAM)
    report = CheckReport()

    K = cfg.run.K if K is None else K
    rec = run(problem, algo, setup.x0, K, algorithm_rng(cfg), track=True,
              constants=setup.constants)
    trace = rec.trace
    xs = list(trace["x"]) + [rec.x_final]
    trace_pts = {"x": xs}

    # generalized smoothness on random pairs with ||x - y|| <= 1
    g = rng.child(0).generator
    worst = math.inf
    for x in _sample_points(setup, trace_pts, rng.child(1), samples):
        u = g.standard_normal(problem.dim)
        y = x + g.uniform(0.0, 1.0) * u / norm2(u)
        i = int(g.integers(problem.n_clients))
        worst = min(worst, generalized_smoothness_margin(problem, i, x, y, L0, L1))
    report.results.append(_result("generalized_smoothness", worst, tol=0.0,
                                  detail=f"{samples} pairs"))

    known_inf = problem.f_inf is not None and problem.f_inf_clients is not None
    pts = xs + _sample_points(setup, trace_pts, rng.child(2), samples)
    if known_inf:
        m8 = min(gradient_domination_margin(problem, i, x, L0, L1, problem.f_inf_clients[i])
                 for x in pts for i in range(problem.n_clients))
        report.results.append(_result("gradient_domination", m8,
                                      detail=f"{len(pts)} points"))
        m2 = min(grad_norm_bound_margin(problem, x, L0, L1, problem.f_inf, problem.f_inf_clients)
                 for x in pts)
        report.results.append(_result("grad_norm_bound", m2,
                                      detail=f"{len(xs)} iterates + {samples} points"))
    else:
        for name in ("gradient_domination", "grad_norm_bound"):
            report.results.append(CheckResult(name, None, detail="infima unknown"))

    # compressor contractivity
    crng = rng.child(3)
    vecs = [crng.child(9, j).normal(problem.dim) * (1 + j % 7) for j in range(samples)]
    if algo.compressor.randomized:
        nvec, draws = 20, 10_000
    else:
        nvec, draws = len(vecs), 1
    margins = contractivity_margins(algo.compressor, vecs[:nvec], crng, draws)
    report.results.append(_result("contractivity", float(np.min(margins)), tol=0.0,
                                  detail=f"{nvec} vectors x {draws} draws"))

    # run invariants
    report.results.append(_result("memory_consistency", -float(np.max(trace["memory_mismatch"])),
                                  tol=1e-12))
    gamma = trace["gamma"]
    if algo.variant.normalized:
        nz = trace["agg_norm"] > 0
        dev = float(np.max(np.abs(trace["step_len"][nz] - gamma), initial=0.0))
    else:
        dev = float(np.max(np.abs(trace["step_len"] - gamma * trace["agg_norm"])
                           / np.maximum(1.0, gamma * trace["agg_norm"])))
    report.results.append(_result("step_length", -dev, tol=1e-12))

    descent_ok = (isinstance(problem, PolynomialProblem) and algo.variant.normalized
                  and not algo.variant.momentum)
    if descent_ok:
        m3 = descent_margins(trace, gamma, L0, L1)
        report.results.append(_result("descent_inequality", float(np.min(m3)),
                                      detail=f"{len(m3)} rounds"))
        m6 = lyapunov_margins(trace, gamma, setup.alpha, L0, L1, problem.f_inf)
        report.results.append(_result("lyapunov_descent", float(np.min(m6, initial=math.inf)),
                                      detail=f"{len(m6)} rounds"))
    else:
        why = "needs a deterministic normalized run with known f_inf"
        report.results.append(CheckResult("descent_inequality", None, detail=why))
        report.results.append(CheckResult("lyapunov_descent", None, detail=why))
    return report


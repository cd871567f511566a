"""Building problems from configs, running them, and searching for the horizon K."""
from __future__ import annotations

import copy
import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from ..algorithms import run
from ..core import RngStream, sample_gaussian, seeded_rng
from ..problems import (
    LogisticProblem,
    PolynomialProblem,
    estimate_D,
    generate_synthetic,
    load_libsvm,
    logistic_constants,
    scale_features,
)
from ..records import CSV_HEADER, RunRecord, write_csv
from .config import ExperimentConfig

# child-stream purposes under the master seed
_DATA, _X0, _ALGO = 10, 11, 12


@dataclass
class Setup:
    problem: object
    x0: np.ndarray
    constants: dict
    alpha: float


def build(cfg: ExperimentConfig) -> Setup:
    """Problem, starting point and the constants every stepsize rule may need."""
    p = cfg.problem
    master = seeded_rng(cfg.run.seed)
    if p.kind == "polynomial":
        problem = PolynomialProblem.from_smoothness(p.d, p.L0, p.L1, n_clients=max(p.n_clients, 1))
        x0 = sample_gaussian(master.child(_X0), p.d, p.x0_mean, p.x0_std)
        consts = problem.constants(estimate_D(x0) if np.any(x0) else None)
    else:
        if p.source == "synthetic":
            data = generate_synthetic(p.n, p.d, master.child(_DATA))
        else:
            label_map = {float(k): v for k, v in p.label_map.items()} or None
            data = load_libsvm(p.source, label_map)
        if p.scale:
            data = scale_features(data)
        problem = LogisticProblem(data, p.lam, p.n_clients or None)
        x0 = sample_gaussian(master.child(_X0), problem.dim, 0.0, 1.0)
        consts = logistic_constants(problem)
    alpha = cfg.algo_config().compressor.alpha(problem.dim)
    kw = {"L0": consts.L0, "L1": consts.L1, "alpha": alpha}
    if consts.L is not None:
        kw["L"] = consts.L
        kw["Ltilde"] = consts.L_tilde
    return Setup(problem, x0, kw, alpha)


def algorithm_rng(cfg: ExperimentConfig, index: int = 0) -> RngStream:
    return seeded_rng(cfg.run.seed).child(_ALGO, index)


def run_experiment(cfg: ExperimentConfig, K: int | None = None, track: bool = False,
                   parallel_clients: bool = False, algo_index: int = 0,
                   write: bool = True) -> RunRecord:
    """Run one configured experiment; writes the CSV when ``run.out`` is set."""
    cfg.validate()
    setup = build(cfg)
    K = cfg.run.K if K is None else K
    record = run(setup.problem, cfg.algo_config(), setup.x0, K, algorithm_rng(cfg, algo_index),
                 track=track, parallel_clients=parallel_clients, constants=setup.constants)
    echo = cfg.to_dict()
    echo["run"]["K"] = K
    echo["resolved"] = {"gamma": record.config["gamma"], "eta": record.config["eta"],
                        "alpha": setup.alpha, "n_clients": setup.problem.n_clients}
    record.config = echo
    record.seed = cfg.run.seed
    if write and cfg.run.out:
        write_csv(record, cfg.run.out)
    return record


class GridSearchError(RuntimeError):
    def __init__(self, best_K: int, best_value: float, K_max: int, epsilon: float):
        super().__init__(f"no K <= {K_max} reached min ||grad f||^2 < {epsilon:g}; "
                         f"best {best_value:.6g} at K={best_K}")
        self.best_K = best_K
        self.best_value = best_value


def grid_search_K(cfg: ExperimentConfig, epsilon: float | None = None, step: int = 500,
                  K_max: int = 20000) -> int:
    """Smallest ``K`` in ``step, 2 step, ..., K_max`` whose run gets ``min_k ||grad f(x^k)||^2 < epsilon``.

    Each candidate re-resolves the stepsize rule, which depends on ``K``.
    """
    if step < 1 or K_max < step:
        raise ValueError("need step >= 1 and K_max >= step")
    eps = cfg.run.epsilon if epsilon is None else epsilon
    best = (0, math.inf)
    for K in range(step, K_max + 1, step):
        rec = run_experiment(cfg, K=K, write=False)
        val = rec.min_grad_norm_sq
        if val < eps:
            return K
        if val < best[1]:
            best = (K, val)
    raise GridSearchError(best[0], best[1], K_max, eps)


def _label(cfg: ExperimentConfig) -> str:
    return cfg.run.label or cfg.algorithm.variant


def compare(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, out=None,
            seed: int | None = None) -> tuple[RunRecord, RunRecord]:
    """Run two configs on shared data; algorithm streams are derived per side.

    Writes a long-format CSV (``algorithm`` column first) when ``out`` is given.
    """
    cfgs = []
    for c in (cfg_a, cfg_b):
        c = copy.deepcopy(c)
        if seed is not None:
            c.run.seed = seed
        cfgs.append(c)
    if cfgs[0].run.seed != cfgs[1].run.seed:
        cfgs[1].run.seed = cfgs[0].run.seed
    recs = tuple(run_experiment(c, algo_index=i, write=False) for i, c in enumerate(cfgs))
    if out:
        write_joint_csv(recs, [_label(c) for c in cfgs], out)
    return recs


def format_joint_csv(records, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if records and records[0].seed is not None:
        buf.write(f"# seed = {records[0].seed}\n")
    for lab, rec in zip(labels, records):
        res = rec.config.get("resolved", {})
        buf.write(f"# {lab}: gamma = {res.get('gamma')}, K = {len(rec.rows) - 1}\n")
    w.writerow(("algorithm",) + CSV_HEADER)
    for lab, rec in zip(labels, records):
        for r in rec.rows:
            w.writerow([lab, r.k, f"{r.f_value:.17g}", f"{r.grad_norm_sq:.17g}",
                        f"{r.min_grad_norm:.17g}", r.bits_cumulative])
    return buf.getvalue()


def write_joint_csv(records, labels, path) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_joint_csv(records, labels))

"""Simulated client/server error-feedback methods.

Four variants share one round structure:

* ``EF21``        -- clients compress ``grad f_i(x) - g_i``; server steps ``x -= gamma g``.
* ``NORM_EF21``   -- same messages, server steps ``x -= gamma g / ||g||``.
* ``EF21_SGDM``   -- clients first update a momentum estimate of a stochastic gradient.
* ``NORM_EF21_SGDM`` -- momentum variant with the normalized server step.

A round is a barrier superstep: every client acts on the broadcast ``x``
and its own memory, then the server reduces in fixed client order.

Messages carry the refreshed memory entries on the compressor's support.
Since the compressors keep coordinates unchanged, this is the same
information as the increment ``C(grad - g_prev)`` at the same bit cost,
and both sides end with bit-identical memories.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .compressors import CompressorKind, Identity
from .core import RngStream, check_dim, norm2
from .problems.base import Problem, mean_vectors
from .records import MetricRow, RunRecord
from .schedules import StepsizeRule

# child-stream purposes
_COMPRESS, _SGRAD, _SGRAD_INIT = 0, 1, 2


class ConfigError(ValueError):
    pass


class Variant(enum.Enum):
    EF21 = "ef21"
    NORM_EF21 = "norm-ef21"
    EF21_SGDM = "ef21-sgdm"
    NORM_EF21_SGDM = "norm-ef21-sgdm"

    @property
    def normalized(self) -> bool:
        return self in (Variant.NORM_EF21, Variant.NORM_EF21_SGDM)

    @property
    def momentum(self) -> bool:
        return self in (Variant.EF21_SGDM, Variant.NORM_EF21_SGDM)


class InitMode(enum.Enum):
    ZERO = "zero"
    GRADIENT = "gradient"


@dataclass(frozen=True)
class AlgoConfig:
    variant: Variant
    compressor: CompressorKind = field(default_factory=Identity)
    rule: StepsizeRule | None = None
    init_mode: InitMode | None = None
    batch: int = 1
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.init_mode is None:
            default = InitMode.ZERO if self.variant.momentum else InitMode.GRADIENT
            object.__setattr__(self, "init_mode", default)
        if self.variant.momentum and self.init_mode is InitMode.GRADIENT:
            raise ConfigError("gradient initialization needs exact gradients; "
                              "stochastic variants start from zero memory")
        if self.batch < 1:
            raise ConfigError("batch must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be nonnegative")


@dataclass
class ClientState:
    g: np.ndarray
    v: np.ndarray | None = None


@dataclass(frozen=True)
class Message:
    """Compressed upload: support ``indices`` and the new memory ``values`` there.

    ``delta`` is the dense compressed residual ``C(target - g_prev)``.
    """

    indices: np.ndarray
    values: np.ndarray
    delta: np.ndarray


@dataclass
class ServerState:
    x: np.ndarray
    g: np.ndarray
    memories: list[np.ndarray]
    k: int = 0


def init_run(problem: Problem, config: AlgoConfig, x0: np.ndarray, rng: RngStream):
    """Initial server state and client memories ``g_i^{-1}`` (and ``v_i^{-1}``)."""
    check_dim(x0, problem.dim)
    n = problem.n_clients
    if config.init_mode is InitMode.GRADIENT:
        if config.variant.momentum:
            raise ConfigError("gradient initialization is only for deterministic variants")
        gs = [g.copy() for g in problem.client_grads(x0)]
    else:
        gs = [np.zeros(problem.dim) for _ in range(n)]
    clients = []
    for i in range(n):
        v = None
        if config.variant.momentum:
            v = problem.stochastic_grad(i, x0, config.batch, rng.child(_SGRAD_INIT, i),
                                        config.noise_sigma)
        clients.append(ClientState(gs[i], v))
    memories = [c.g.copy() for c in clients]
    server = ServerState(x0.copy(), mean_vectors(memories), memories, 0)
    return server, clients


def _compress_towards(g_prev: np.ndarray, target: np.ndarray, compressor: CompressorKind,
                      rng: RngStream | None):
    residual = target - g_prev
    idx = compressor.select(residual, rng)
    delta = np.zeros(residual.shape[0])
    delta[idx] = residual[idx]
    values = target[idx]
    g_new = g_prev.copy()
    g_new[idx] = values
    return Message(idx, values, delta), g_new


def client_step_deterministic(state: ClientState, x: np.ndarray, problem: Problem, i: int,
                              compressor: CompressorKind, rng: RngStream | None = None,
                              grad: np.ndarray | None = None):
    """One ``EF21`` client round; returns ``(message, new_state)``."""
    if grad is None:
        grad = problem.client_grad(i, x)
    check_dim(grad, state.g.shape[0])
    msg, g_new = _compress_towards(state.g, grad, compressor, rng)
    return msg, ClientState(g_new, state.v)


def client_step_momentum(state: ClientState, x: np.ndarray, problem: Problem, i: int, eta: float,
                         compressor: CompressorKind, rng: RngStream | None,
                         batch: int = 1, sigma: float = 0.0,
                         sgrad_rng: RngStream | None = None):
    """One ``EF21-SGDM`` client round: momentum update, then compress ``v - g``."""
    if not 0.0 < eta <= 1.0:
        raise ConfigError(f"eta must lie in (0, 1], got {eta}")
    if state.v is None:
        raise ConfigError("momentum step needs a momentum estimator")
    sg = problem.stochastic_grad(i, x, batch, sgrad_rng, sigma)
    v = (1.0 - eta) * state.v + eta * sg
    msg, g_new = _compress_towards(state.g, v, compressor, rng)
    return msg, ClientState(g_new, v)


def server_step(server: ServerState, messages: list[Message], gamma: float,
                normalized: bool) -> ServerState:
    """Fold messages into the per-client memories, average, and move ``x``.

    A zero aggregate leaves ``x`` in place under normalization.
    """
    if len(messages) != len(server.memories):
        raise ConfigError(f"expected {len(server.memories)} messages, got {len(messages)}")
    if gamma <= 0:
        raise ConfigError("gamma must be positive")
    memories = []
    for mem, msg in zip(server.memories, messages):
        mem = mem.copy()
        mem[msg.indices] = msg.values
        memories.append(mem)
    g = mean_vectors(memories)
    if normalized:
        gn = norm2(g)
        x = server.x - gamma * (g / gn) if gn > 0 else server.x.copy()
    else:
        x = server.x - gamma * g
    return ServerState(x, g, memories, server.k + 1)


def lyapunov_value(server: ServerState, clients: list[ClientState], problem: Problem,
                   gamma: float, alpha: float, f_inf: float, grads=None) -> float:
    """``f(x) - f_inf + 2 gamma / (1 - sqrt(1-alpha)) * mean_i ||grad f_i(x) - g_i||``.

    Evaluated at the server iterate against the client memories.
    """
    x = server.x
    if grads is None:
        grads = problem.client_grads(x)
    err = sum(norm2(gi - c.g) for gi, c in zip(grads, clients)) / len(clients)
    theta = 1.0 - math.sqrt(1.0 - alpha)
    return problem.value(x) - f_inf + 2.0 * gamma / theta * err


def resolve_rule(config: AlgoConfig, K: int, **constants) -> tuple[float, float | None]:
    if config.rule is None:
        raise ConfigError("no stepsize rule configured")
    gamma, eta = config.rule.resolve(K, **constants)
    if config.variant.momentum and eta is None:
        raise ConfigError("momentum variants need a rule that sets eta")
    return gamma, eta


def run(problem: Problem, config: AlgoConfig, x0: np.ndarray, K: int, rng: RngStream,
        gamma: float | None = None, eta: float | None = None, track: bool = False,
        parallel_clients: bool = False, constants: dict | None = None) -> RunRecord:
    """Execute rounds ``k = 0..K`` and record metrics at ``x^0..x^K``.

    ``gamma``/``eta`` override the configured rule. With ``track`` the
    record's ``trace`` holds per-round arrays used by the inequality checks:
    ``f``, ``grad_norm``, ``mean_client_grad_norm``, ``memory_error``
    (``||grad f(x^k) - g^k||``), ``mean_client_memory_error``
    (``mean_i ||grad f_i(x^k) - g_i^k||``), ``step_len``, ``agg_norm`` and
    ``memory_mismatch`` (server vs client memory averages), plus the
    iterates ``x`` (``x^0..x^K``).
    """
    if K < 0:
        raise ConfigError("K must be nonnegative")
    if gamma is None:
        gamma, eta_rule = resolve_rule(config, K, **(constants or {}))
        if eta is None:
            eta = eta_rule
    if config.variant.momentum and eta is None:
        raise ConfigError("momentum variants need eta")
    x0 = np.asarray(x0, dtype=np.float64)
    server, clients = init_run(problem, config, x0, rng)
    n = problem.n_clients
    bits_per_round = config.compressor.payload_bits(problem.dim)
    normalized = config.variant.normalized
    record = RunRecord(seed=rng.seed)
    trace: dict[str, list] = {k: [] for k in (
        "f", "grad_norm", "mean_client_grad_norm", "memory_error",
        "mean_client_memory_error", "step_len", "agg_norm", "memory_mismatch", "x")}
    best = math.inf
    pool = ThreadPoolExecutor() if parallel_clients and n > 1 else None

    def step_client(i, x, grads, k):
        crng = rng.child(_COMPRESS, i, k) if config.compressor.randomized else None
        if config.variant.momentum:
            return client_step_momentum(clients[i], x, problem, i, eta, config.compressor, crng,
                                        config.batch, config.noise_sigma,
                                        rng.child(_SGRAD, i, k))
        return client_step_deterministic(clients[i], x, problem, i, config.compressor, crng,
                                         grad=grads[i])

    try:
        for k in range(K + 1):
            x = server.x
            grads = problem.client_grads(x)
            full = mean_vectors(grads)
            gsq = float(np.dot(full, full))
            f = problem.value(x)
            best = min(best, math.sqrt(gsq))
            record.rows.append(MetricRow(k, f, gsq, best, (k + 1) * bits_per_round))

            if pool is not None:
                out = list(pool.map(lambda i: step_client(i, x, grads, k), range(n)))
            else:
                out = [step_client(i, x, grads, k) for i in range(n)]
            messages = [m for m, _ in out]
            clients = [c for _, c in out]
            new_server = server_step(server, messages, gamma, normalized)

            if track:
                trace["x"].append(x)
                trace["f"].append(f)
                trace["grad_norm"].append(math.sqrt(gsq))
                trace["mean_client_grad_norm"].append(sum(norm2(g) for g in grads) / n)
                trace["memory_error"].append(norm2(full - new_server.g))
                trace["mean_client_memory_error"].append(
                    sum(norm2(g - c.g) for g, c in zip(grads, clients)) / n)
                trace["step_len"].append(norm2(new_server.x - x))
                trace["agg_norm"].append(norm2(new_server.g))
                client_avg = mean_vectors([c.g for c in clients])
                trace["memory_mismatch"].append(float(np.max(np.abs(client_avg - new_server.g))))
            server = new_server
    finally:
        if pool is not None:
            pool.shutdown()

    record.x_final = server.x
    if track:
        record.trace = {k: np.asarray(v) for k, v in trace.items()}
        record.trace["f_final"] = problem.value(server.x)
        record.trace["gamma"] = gamma
        record.trace["eta"] = eta
    record.config = {"variant": config.variant.value, "compressor": str(config.compressor),
                     "K": K, "gamma": gamma, "eta": eta, "n_clients": n}
    return record


def with_rule(config: AlgoConfig, rule: StepsizeRule) -> AlgoConfig:
    return replace(config, rule=rule)

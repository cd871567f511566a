import math

import numpy as np
import pytest
import reference_loops

from normef.algorithms import (
    AlgoConfig,
    ClientState,
    ConfigError,
    InitMode,
    ServerState,
    Variant,
    client_step_deterministic,
    client_step_momentum,
    init_run,
    lyapunov_value,
    run,
    server_step,
)
from normef.compressors import Identity, RandK, TopK
from normef.core import seeded_rng
from normef.problems import LogisticProblem, PolynomialProblem, generate_synthetic
from normef.schedules import ConstantStep, NormalizedSqrtK

K_REF = 49  # 50 rounds


def _poly(n=1):
    return PolynomialProblem.from_smoothness(4, 4.0, 1.0, n_clients=n)


def _logistic(n=20, d=6, clients=5, seed=0):
    return LogisticProblem(generate_synthetic(n, d, seeded_rng(seed)), 0.1, clients)


def _x0(d=4, seed=0):
    return 20.0 + seeded_rng(seed).normal(d)


def _iterates(problem, config, x0, K, rng):
    rec = run(problem, config, x0, K, rng, track=True)
    return list(rec.trace["x"]) + [rec.x_final]


# --- reduction identities --------------------------------------------------

def test_reduction_a_ef21_identity_is_gradient_descent():
    p = _poly()
    x0 = _x0()
    cfg = AlgoConfig(Variant.EF21, Identity(), ConstantStep(0.01))
    xs = _iterates(p, cfg, x0, K_REF, seeded_rng(1))
    ref = reference_loops.gradient_descent(p, x0, 0.01, K_REF + 1)
    assert len(xs) == len(ref) == 51
    assert all(np.array_equal(a, b) for a, b in zip(xs, ref))


@pytest.mark.parametrize("problem", [_poly(), _logistic()])
def test_reduction_b_norm_ef21_identity_is_normalized_gd(problem):
    x0 = _x0(problem.dim)
    cfg = AlgoConfig(Variant.NORM_EF21, Identity(), ConstantStep(0.05))
    xs = _iterates(problem, cfg, x0, K_REF, seeded_rng(2))
    ref = reference_loops.normalized_gd(problem, x0, 0.05, K_REF + 1)
    assert all(np.array_equal(a, b) for a, b in zip(xs, ref))


@pytest.mark.parametrize("compressor", [TopK(1), RandK(2), Identity()])
def test_reduction_c_sgdm_eta_one_full_batch_is_norm_ef21(compressor):
    p = _logistic()
    x0 = _x0(p.dim)
    full = len(p.shards[0])
    det = AlgoConfig(Variant.NORM_EF21, compressor, ConstantStep(0.05), InitMode.ZERO)
    mom = AlgoConfig(Variant.NORM_EF21_SGDM, compressor, ConstantStep(0.05, 1.0), batch=full)
    a = _iterates(p, det, x0, K_REF, seeded_rng(3))
    b = _iterates(p, mom, x0, K_REF, seeded_rng(3))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    ra = run(p, det, x0, K_REF, seeded_rng(3))
    rb = run(p, mom, x0, K_REF, seeded_rng(3))
    assert ra.rows == rb.rows


@pytest.mark.parametrize("problem, batch, sigma", [(_logistic(), 1, 0.0), (_poly(3), 1, 2.0)])
def test_reduction_d_sgdm_identity_is_normalized_sgdm(problem, batch, sigma):
    x0 = _x0(problem.dim)
    cfg = AlgoConfig(Variant.NORM_EF21_SGDM, Identity(), ConstantStep(0.05, 0.3),
                     batch=batch, noise_sigma=sigma)
    xs = _iterates(problem, cfg, x0, K_REF, seeded_rng(4))
    ref = reference_loops.normalized_sgdm(problem, x0, 0.05, 0.3, K_REF + 1, seeded_rng(4),
                                          batch, sigma)
    assert all(np.array_equal(a, b) for a, b in zip(xs, ref))


# --- init and client steps -------------------------------------------------

def test_init_zero_memory():
    p = _poly(3)
    cfg = AlgoConfig(Variant.NORM_EF21, TopK(1), init_mode=InitMode.ZERO)
    server, clients = init_run(p, cfg, _x0(), seeded_rng(0))
    assert all(np.array_equal(c.g, np.zeros(4)) for c in clients)
    assert np.array_equal(server.g, np.zeros(4))


def test_init_gradient_identity_first_aggregate():
    p = _logistic()
    x0 = _x0(p.dim)
    cfg = AlgoConfig(Variant.NORM_EF21, Identity())
    assert cfg.init_mode is InitMode.GRADIENT
    server, clients = init_run(p, cfg, x0, seeded_rng(0))
    msgs, new = zip(*[client_step_deterministic(c, x0, p, i, Identity()) for i, c in enumerate(clients)])
    s1 = server_step(server, list(msgs), 0.1, True)
    assert np.allclose(s1.g, p.grad(x0), rtol=0, atol=1e-15)


def test_gradient_init_rejected_for_momentum():
    with pytest.raises(ConfigError):
        AlgoConfig(Variant.NORM_EF21_SGDM, TopK(1), init_mode=InitMode.GRADIENT)
    assert AlgoConfig(Variant.EF21_SGDM).init_mode is InitMode.ZERO


def test_sgdm_init_deterministic_oracle():
    p = _logistic()
    x0 = _x0(p.dim)
    cfg = AlgoConfig(Variant.NORM_EF21_SGDM, TopK(1), batch=len(p.shards[0]))
    _, clients = init_run(p, cfg, x0, seeded_rng(0))
    assert all(np.array_equal(c.v, p.client_grad(i, x0)) for i, c in enumerate(clients))


def test_client_step_examples():
    p = _poly()
    x = np.array([1.0, -2.0, 0.5, 3.0])
    grad = p.gradient(x)
    msg, st = client_step_deterministic(ClientState(np.zeros(4)), x, p, 0, Identity())
    assert np.array_equal(st.g, grad)
    msg, st2 = client_step_deterministic(st, x, p, 0, TopK(1))
    assert np.array_equal(msg.delta, np.zeros(4)) and np.array_equal(st2.g, st.g)
    # residual [3, -5, 2, 0] under top-1
    g_prev = grad - np.array([3.0, -5.0, 2.0, 0.0])
    msg, st3 = client_step_deterministic(ClientState(g_prev), x, p, 0, TopK(1))
    assert np.array_equal(msg.delta, [0.0, -5.0, 0.0, 0.0])
    assert np.allclose(st3.g, g_prev + msg.delta, rtol=0, atol=1e-12)


def test_client_momentum_examples():
    p = _poly()
    x = np.array([1.0, -2.0, 0.5, 3.0])
    state = ClientState(np.zeros(4), np.ones(4))
    _, s = client_step_momentum(state, x, p, 0, 1.0, Identity(), None)
    assert np.array_equal(s.v, p.gradient(x))
    fixed = ClientState(np.zeros(4), p.gradient(x))
    for eta in (0.1, 0.5, 0.9):
        _, s = client_step_momentum(fixed, x, p, 0, eta, TopK(2), None)
        assert np.allclose(s.v, p.gradient(x), rtol=1e-15, atol=0)
    det_msg, det_state = client_step_deterministic(ClientState(np.zeros(4)), x, p, 0, Identity())
    mom_msg, mom_state = client_step_momentum(ClientState(np.zeros(4), np.ones(4)), x, p, 0, 1.0,
                                              Identity(), None)
    assert np.array_equal(det_msg.delta, mom_msg.delta) and np.array_equal(det_state.g, mom_state.g)
    for bad in (0.0, 1.5):
        with pytest.raises(ConfigError):
            client_step_momentum(state, x, p, 0, bad, Identity(), None)


# --- server step -----------------------------------------------------------

def _server_with_aggregate(g, x=None):
    x = np.zeros(len(g)) if x is None else x
    g = np.asarray(g, dtype=float)
    return ServerState(x, g.copy(), [g.copy()])


def test_server_step_normalized():
    from normef.algorithms import Message
    s = _server_with_aggregate([0.0, 0.0])
    msg = Message(np.array([0, 1]), np.array([3.0, 4.0]), np.array([3.0, 4.0]))
    out = server_step(s, [msg], 0.5, normalized=True)
    assert np.allclose(out.x, [-0.3, -0.4], rtol=0, atol=1e-16)
    assert math.isclose(np.linalg.norm(out.x), 0.5, rel_tol=1e-15)
    assert out.k == 1


def test_server_step_zero_aggregate_keeps_x():
    from normef.algorithms import Message
    x = np.array([1.0, 2.0])
    s = _server_with_aggregate([0.0, 0.0], x)
    msg = Message(np.array([], dtype=int), np.array([]), np.zeros(2))
    out = server_step(s, [msg], 0.5, normalized=True)
    assert np.array_equal(out.x, x)


def test_server_step_errors():
    s = _server_with_aggregate([1.0, 1.0])
    with pytest.raises(ConfigError):
        server_step(s, [], 0.5, True)


# --- run -------------------------------------------------------------------

def test_run_rows_and_bits():
    p = _poly()
    cfg = AlgoConfig(Variant.NORM_EF21, TopK(1), NormalizedSqrtK(1.0))
    rec = run(p, cfg, _x0(), 0, seeded_rng(0))
    assert len(rec.rows) == 1 and rec.rows[0].bits_cumulative == 34
    rec = run(p, cfg, _x0(), 20, seeded_rng(0))
    assert [r.k for r in rec.rows] == list(range(21))
    assert rec.rows[-1].bits_cumulative == 21 * 34
    mins = rec.column("min_grad_norm")
    assert np.all(np.diff(mins) <= 0)
    assert rec.rows[0].f_value == p.value(_x0())


def test_run_deterministic_and_parallel_identical():
    p = _logistic(40, 6, 8)
    cfg = AlgoConfig(Variant.NORM_EF21_SGDM, RandK(2), ConstantStep(0.01, 0.2), batch=2)
    x0 = _x0(6)
    a = run(p, cfg, x0, 30, seeded_rng(5))
    b = run(p, cfg, x0, 30, seeded_rng(5))
    c = run(p, cfg, x0, 30, seeded_rng(5), parallel_clients=True)
    assert a.rows == b.rows == c.rows
    assert np.array_equal(a.x_final, c.x_final)
    d = run(p, cfg, x0, 30, seeded_rng(6))
    assert a.rows != d.rows


@pytest.mark.parametrize("variant", list(Variant))
def test_step_length_and_memory_consistency(variant):
    p = _logistic()
    rule = ConstantStep(0.05, 0.5 if variant.momentum else None)
    cfg = AlgoConfig(variant, TopK(2), rule)
    rec = run(p, cfg, _x0(p.dim), 40, seeded_rng(7), track=True)
    t = rec.trace
    assert np.max(t["memory_mismatch"]) <= 1e-12
    if variant.normalized:
        assert np.max(np.abs(t["step_len"] - 0.05)) <= 1e-12
    else:
        assert np.max(np.abs(t["step_len"] - 0.05 * t["agg_norm"])) <= 1e-12


def test_momentum_needs_eta():
    p = _poly()
    cfg = AlgoConfig(Variant.NORM_EF21_SGDM, TopK(1), NormalizedSqrtK(1.0))
    with pytest.raises(ConfigError):
        run(p, cfg, _x0(), 5, seeded_rng(0))
    with pytest.raises(ConfigError):
        run(p, AlgoConfig(Variant.NORM_EF21, TopK(1), NormalizedSqrtK(1.0)), _x0(), -1, seeded_rng(0))


# --- Lyapunov --------------------------------------------------------------

def test_lyapunov_examples():
    p = _poly(2)
    zero = np.zeros(4)
    server = ServerState(zero, zero.copy(), [zero.copy(), zero.copy()])
    clients = [ClientState(zero.copy()), ClientState(zero.copy())]
    assert lyapunov_value(server, clients, p, 0.1, 0.25, 0.0) == 0.0

    x = _x0()
    server = ServerState(x, zero.copy(), [zero.copy(), zero.copy()])
    clients = [ClientState(zero.copy()), ClientState(zero.copy())]
    assert lyapunov_value(server, clients, p, 0.1, 0.25, 0.0) >= p.value(x)

    cfg = AlgoConfig(Variant.NORM_EF21, Identity(), ConstantStep(0.1), InitMode.ZERO)
    srv, cls = init_run(p, cfg, x, seeded_rng(0))
    msgs, cls = zip(*[client_step_deterministic(c, srv.x, p, i, Identity()) for i, c in enumerate(cls)])
    V = lyapunov_value(ServerState(srv.x, srv.g, srv.memories), list(cls), p, 0.1, 1.0, 0.0)
    assert V == p.value(x)

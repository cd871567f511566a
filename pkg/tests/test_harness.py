import math

import numpy as np
import pytest

from normef.harness import (
    ConfigValidationError,
    ExperimentConfig,
    GridSearchError,
    build,
    check_suite,
    compare,
    finite_diff_grad,
    grid_search_K,
    load_config,
    run_experiment,
    save_config,
)
from normef.harness.config import AlgorithmSection, ProblemSection, RunSection, dumps_config
from normef.problems import PolynomialProblem
from normef.records import CSV_HEADER, MetricRow, RunRecord, format_csv, read_csv, write_csv
from normef.schedules import StepsizeError


def poly_cfg(L1=1.0, K=2000, **algo):
    a = dict(variant="norm-ef21", compressor="top-1", rule="sqrtk")
    a.update(algo)
    return ExperimentConfig(ProblemSection(kind="polynomial", L0=4.0, L1=L1),
                            AlgorithmSection(**a), RunSection(K=K))


def logistic_cfg(K=100, seed=0, **algo):
    a = dict(variant="norm-ef21", compressor="top-1", rule="sqrtk")
    a.update(algo)
    return ExperimentConfig(ProblemSection(kind="logistic", n=20, d=10, lam=0.1),
                            AlgorithmSection(**a), RunSection(K=K, seed=seed))


# --- config ----------------------------------------------------------------

def test_config_round_trip(tmp_path):
    cfg = logistic_cfg()
    cfg.problem.label_map = {"2": -1.0, "4": 1.0}
    cfg.run.out = "x/y.csv"
    path = tmp_path / "c.toml"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_config_field_errors(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('[problem]\nkind = "cubic"\nbogus = 1\n[algorithm]\nrule = "adam"\n'
                    '[run]\nK = "many"\n[extra]\n')
    with pytest.raises(ConfigValidationError) as e:
        load_config(path)
    text = " | ".join(e.value.errors)
    for part in ("problem.bogus", "run.K", "extra"):
        assert part in text
    cfg = poly_cfg()
    cfg.problem.kind = "cubic"
    cfg.algorithm.rule = "adam"
    with pytest.raises(ConfigValidationError) as e:
        cfg.validate()
    assert any("problem.kind" in m for m in e.value.errors)
    assert any("algorithm.rule" in m for m in e.value.errors)


def test_config_momentum_constraints():
    cfg = logistic_cfg(variant="norm-ef21-sgdm", rule="sqrtk")
    with pytest.raises(ConfigValidationError):
        cfg.validate()
    cfg = logistic_cfg(variant="norm-ef21-sgdm", rule="sgdm", init="gradient")
    with pytest.raises(ConfigValidationError):
        cfg.validate()


def test_config_toml_syntax_error(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[problem\n")
    with pytest.raises(ConfigValidationError):
        load_config(path)


# --- records / CSV ---------------------------------------------------------

def _record(rows=3):
    return RunRecord([MetricRow(k, 1.0 / 3 + k, math.pi * 10**-k, math.e / (k + 1), 34 * (k + 1))
                      for k in range(rows)], {"a": {"b": 1}}, seed=7)


def test_csv_lines_and_round_trip(tmp_path):
    rec = _record()
    assert len(format_csv(rec, comments=False).splitlines()) == 4
    path = tmp_path / "sub" / "r.csv"
    write_csv(rec, path)
    text = path.read_text()
    assert text.startswith("# seed = 7\n# a.b = 1\n")
    assert ",".join(CSV_HEADER) in text
    assert read_csv(path) == rec.rows


def test_csv_empty_record():
    assert format_csv(RunRecord(), comments=False) == "k,f,grad_norm_sq,min_grad_norm,bits\n"


def test_csv_write_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        write_csv(_record(), blocker / "r.csv")


# --- experiments -----------------------------------------------------------

def test_fig1_left_run():
    rec = run_experiment(poly_cfg())
    assert rec.min_grad_norm_sq < 1e-4
    assert len(rec.rows) == 2001
    assert rec.config["resolved"]["gamma"] == 1 / math.sqrt(2001)


def test_synthetic_logistic_run(tmp_path):
    cfg = logistic_cfg()
    cfg.run.out = str(tmp_path / "o.csv")
    rec = run_experiment(cfg)
    assert len(rec.rows) == 101
    assert len(read_csv(cfg.run.out)) == 101
    assert rec.config["resolved"]["n_clients"] == 20


def test_sgdm_cap_rejected_before_iterating(monkeypatch):
    import normef.algorithms as alg
    calls = []
    monkeypatch.setattr(alg, "init_run", lambda *a, **k: calls.append(1))
    cfg = logistic_cfg(variant="norm-ef21-sgdm", rule="sgdm", gamma0=1.0)
    cfg.problem.n_clients = 5
    with pytest.raises(StepsizeError, match="cap"):
        run_experiment(cfg)
    assert calls == []


def test_build_polynomial_constants():
    setup = build(poly_cfg())
    D = float(np.max(np.abs(setup.x0)))
    p = setup.problem
    assert math.isclose(setup.constants["L"], p.lam * 2 * D * D / 2 + 2 * p.lam)
    assert setup.alpha == 0.25


def test_bits_cumulative_exact():
    rec = run_experiment(poly_cfg(K=37))
    assert rec.rows[-1].bits_cumulative == 38 * 34


def test_grid_search_examples():
    assert grid_search_K(poly_cfg(), epsilon=math.inf, step=500, K_max=2000) == 500
    K = grid_search_K(poly_cfg(), epsilon=1e-4, step=500, K_max=20000)
    assert K == 2000
    # first hit: a looser target never needs a larger K
    assert grid_search_K(poly_cfg(), epsilon=1e-3, step=500, K_max=20000) <= K
    with pytest.raises(GridSearchError) as e:
        grid_search_K(poly_cfg(), epsilon=1e-12, step=500, K_max=1000)
    assert e.value.best_K in (500, 1000) and e.value.best_value > 1e-12
    with pytest.raises(ValueError):
        grid_search_K(poly_cfg(), step=0)


def test_compare_joint_csv(tmp_path):
    a = logistic_cfg()
    b = logistic_cfg(variant="ef21", rule="ef21")
    b.run.seed = 3  # compare uses one master seed
    out = tmp_path / "joint.csv"
    ra, rb = compare(a, b, out=str(out))
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "algorithm,k,f,grad_norm_sq,min_grad_norm,bits"
    assert len(lines) == 1 + 101 + 101
    assert lines[1].startswith("norm-ef21,0,") and lines[-1].startswith("ef21,100,")
    # shared data and start point
    assert ra.rows[0] == rb.rows[0]


# --- checks ----------------------------------------------------------------

def test_finite_diff_linear_exact():
    class Linear(PolynomialProblem):
        def client_value(self, i, x):
            return float(np.array([2.0, -3.0]) @ x)

    p = Linear(2, 1.0)
    for h in (1e-1, 1e-3, 1.0):
        assert np.allclose(finite_diff_grad(p, 0, np.array([0.3, 0.7]), h), [2.0, -3.0],
                           rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        finite_diff_grad(p, 0, np.zeros(2), 0.0)


def test_check_suite_default_polynomial_passes():
    report = check_suite(poly_cfg())
    assert report.passed, report.format()
    assert {r.name for r in report.results if r.passed} == {
        "generalized_smoothness", "gradient_domination", "grad_norm_bound",
        "contractivity", "memory_consistency", "step_length", "descent_inequality",
        "lyapunov_descent"}


def test_check_suite_detects_wrong_constants():
    report = check_suite(poly_cfg(K=50), samples=200, L0=4.0 * 0.01, L1=1.0 * 0.01)
    assert not report.passed
    assert report["grad_norm_bound"].passed is False
    assert report["grad_norm_bound"].margin < 0
    assert report["generalized_smoothness"].passed is False


def test_check_suite_identity_margin_zero():
    report = check_suite(poly_cfg(K=20, compressor="identity"), samples=100)
    assert report["contractivity"].margin == 0.0
    assert report.passed


def test_check_suite_logistic_skips_unknown_infima():
    report = check_suite(logistic_cfg(K=30), samples=100)
    assert report.passed
    for name in ("gradient_domination", "grad_norm_bound", "descent_inequality",
                 "lyapunov_descent"):
        assert report[name].passed is None
    assert report["generalized_smoothness"].passed


def test_libsvm_source_end_to_end(tmp_path):
    from normef.core import seeded_rng
    from normef.problems import Dataset, generate_synthetic, save_libsvm

    ds = generate_synthetic(30, 5, seeded_rng(0))
    path = tmp_path / "bc.libsvm"
    # breast-cancer style labels 2/4
    save_libsvm(Dataset(3 * ds.features + 1, ds.labels), path)
    path.write_text(path.read_text().replace("+1 ", "4 ").replace("-1 ", "2 "))
    cfg = ExperimentConfig(ProblemSection(kind="logistic", source=str(path), lam=0.1, scale=True,
                                          label_map={"2": -1.0, "4": 1.0}),
                           AlgorithmSection(), RunSection(K=100))
    setup = build(cfg)
    assert setup.problem.n_clients == 30
    assert np.abs(setup.problem.A).max() <= 1.0
    assert np.array_equal(setup.problem.b, ds.labels)
    base = ExperimentConfig.from_dict(cfg.to_dict())
    base.algorithm.variant, base.algorithm.rule = "ef21", "ef21"
    assert run_experiment(cfg).final_grad_norm_sq < run_experiment(base).final_grad_norm_sq

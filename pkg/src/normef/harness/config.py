"""Experiment configuration and its TOML file form.

A config file has three tables::

    [problem]
    kind = "polynomial"        # or "logistic"
    d = 4
    L0 = 4.0
    L1 = 1.0

    [algorithm]
    variant = "norm-ef21"      # ef21 | norm-ef21 | ef21-sgdm | norm-ef21-sgdm
    compressor = "top-1"
    rule = "sqrtk"             # sqrtk | single-node | ef21 | sgdm | constant
    gamma0 = 1.0

    [run]
    K = 2000
    seed = 0
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from ..algorithms import AlgoConfig, InitMode, Variant
from ..compressors import CompressorError, parse_compressor
from ..schedules import ConstantStep, EF21Classical, NormalizedSqrtK, SgdmRule, SingleNodeConstant

RULES = ("sqrtk", "single-node", "ef21", "sgdm", "constant")


class ConfigValidationError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ProblemSection:
    kind: str = "polynomial"
    # polynomial
    d: int = 4
    L0: float = 4.0
    L1: float = 1.0
    x0_mean: float = 20.0
    x0_std: float = 1.0
    # logistic
    source: str = "synthetic"
    n: int = 20
    lam: float = 0.1
    scale: bool = False
    label_map: dict[str, float] = field(default_factory=dict)
    #: clients; 0 means one client per data row (logistic) or a single node (polynomial)
    n_clients: int = 0


@dataclass
class AlgorithmSection:
    variant: str = "norm-ef21"
    compressor: str = "top-1"
    value_bits: int = 32
    rule: str = "sqrtk"
    gamma0: float = 1.0
    beta: float = 2.0
    gamma: float = 0.0
    eta: float = 0.0
    clamp: bool = False
    init: str = "default"
    batch: int = 1
    noise_sigma: float = 0.0


@dataclass
class RunSection:
    K: int = 100
    seed: int = 0
    epsilon: float = 1e-4
    out: str = ""
    label: str = ""


@dataclass
class ExperimentConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    algorithm: AlgorithmSection = field(default_factory=AlgorithmSection)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> "ExperimentConfig":
        errs = []
        p, a, r = self.problem, self.algorithm, self.run
        if p.kind not in ("polynomial", "logistic"):
            errs.append(f"problem.kind: unknown kind {p.kind!r}")
        if p.kind == "polynomial":
            if p.d < 1:
                errs.append("problem.d: must be positive")
            if p.L0 <= 0:
                errs.append("problem.L0: must be positive")
            if p.L1 <= 0:
                errs.append("problem.L1: must be positive")
            if p.x0_std < 0:
                errs.append("problem.x0_std: must be nonnegative")
        else:
            if p.source == "synthetic" and (p.n < 1 or p.d < 1):
                errs.append("problem.n/problem.d: must be positive for synthetic data")
            if p.lam < 0:
                errs.append("problem.lam: must be nonnegative")
        if p.n_clients < 0:
            errs.append("problem.n_clients: must be nonnegative")
        try:
            Variant(a.variant)
        except ValueError:
            errs.append(f"algorithm.variant: unknown variant {a.variant!r}")
        try:
            parse_compressor(a.compressor, a.value_bits)
        except CompressorError as e:
            errs.append(f"algorithm.compressor: {e}")
        if a.rule not in RULES:
            errs.append(f"algorithm.rule: unknown rule {a.rule!r} (choose from {', '.join(RULES)})")
        if a.rule in ("sqrtk", "sgdm") and a.gamma0 <= 0:
            errs.append("algorithm.gamma0: must be positive")
        if a.rule == "single-node" and a.beta < 2:
            errs.append("algorithm.beta: must be at least 2")
        if a.rule == "constant" and a.gamma <= 0:
            errs.append("algorithm.gamma: must be positive for the constant rule")
        if a.init not in ("default", "zero", "gradient"):
            errs.append(f"algorithm.init: unknown mode {a.init!r}")
        if a.batch < 1:
            errs.append("algorithm.batch: must be positive")
        if a.noise_sigma < 0:
            errs.append("algorithm.noise_sigma: must be nonnegative")
        if a.variant in ("ef21-sgdm", "norm-ef21-sgdm"):
            if a.init == "gradient":
                errs.append("algorithm.init: stochastic variants start from zero memory")
            if a.rule not in ("sgdm", "constant"):
                errs.append("algorithm.rule: momentum variants need the sgdm or constant rule")
            if a.rule == "constant" and not 0 < a.eta <= 1:
                errs.append("algorithm.eta: must lie in (0, 1]")
        if r.K < 0:
            errs.append("run.K: must be nonnegative")
        if not 0 <= r.seed < 2**64:
            errs.append("run.seed: must be a 64-bit unsigned integer")
        if r.epsilon <= 0:
            errs.append("run.epsilon: must be positive")
        if errs:
            raise ConfigValidationError(errs)
        return self

    def algo_config(self) -> AlgoConfig:
        a = self.algorithm
        rule = {
            "sqrtk": lambda: NormalizedSqrtK(a.gamma0),
            "single-node": lambda: SingleNodeConstant(a.beta),
            "ef21": lambda: EF21Classical(),
            "sgdm": lambda: SgdmRule(a.gamma0, a.clamp),
            "constant": lambda: ConstantStep(a.gamma, a.eta or None),
        }[a.rule]()
        init = None if a.init == "default" else InitMode(a.init)
        return AlgoConfig(Variant(a.variant), parse_compressor(a.compressor, a.value_bits), rule,
                          init, a.batch, a.noise_sigma)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        errs = []
        sections = {}
        for name, typ in (("problem", ProblemSection), ("algorithm", AlgorithmSection),
                          ("run", RunSection)):
            raw = dict(data.get(name, {}))
            known = {f.name: f for f in fields(typ)}
            kwargs = {}
            for key, val in raw.items():
                if key not in known:
                    errs.append(f"{name}.{key}: unknown field")
                    continue
                kwargs[key] = _coerce(f"{name}.{key}", known[key].type, val, errs)
            sections[name] = typ(**kwargs)
        for name in data:
            if name not in ("problem", "algorithm", "run"):
                errs.append(f"{name}: unknown section")
        if errs:
            raise ConfigValidationError(errs)
        return cls(**sections).validate()


def _coerce(where: str, typ, val, errs):
    typ = str(typ)
    try:
        if typ == "int":
            if isinstance(val, bool) or (isinstance(val, float) and not val.is_integer()):
                raise TypeError
            return int(val)
        if typ == "float":
            if isinstance(val, bool):
                raise TypeError
            return float(val)
        if typ == "bool":
            if not isinstance(val, bool):
                raise TypeError
            return val
        if typ == "str":
            if not isinstance(val, str):
                raise TypeError
            return val
        if typ.startswith("dict"):
            if not isinstance(val, dict):
                raise TypeError
            return {str(k): float(v) for k, v in val.items()}
    except (TypeError, ValueError):
        errs.append(f"{where}: expected {typ}, got {val!r}")
        return None
    return val


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigValidationError([f"{path}: {e}"]) from None
    return ExperimentConfig.from_dict(data)


def dumps_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_config(cfg))

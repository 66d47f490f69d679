"""Experiment configuration: one JSON document per run, loaded into frozen dataclasses."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from .attacks import BudgetSpec
from .classifiers import ARCHITECTURES, TrainConfig
from .errors import ConfigError, RobustLensError
from .graph import CBA_DEFAULT_OMEGA, GenModel
from .propagation import LPConfig
from .utils import stable_hash


SYNTHETIC = ("csbm", "cba")
REAL = "real"

DEFAULT_KS = (0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0)

PROFILES: Dict[str, Dict[str, int]] = {
    "full": {"seeds": 10, "test_nodes": 1000},
    "quick": {"seeds": 3, "test_nodes": 200},
}

BAYES = "bayes"
LP_ONLY = "LP"


@dataclass(frozen=True)
class ModelSpec:
    variant: str = "csbm"
    n: int = 1000
    p: float = 0.0063
    q: float = 0.0015
    m: int = 2
    omega: Tuple[Tuple[float, ...], ...] = CBA_DEFAULT_OMEGA
    sigma: float = 1.0
    d: Optional[int] = None
    files: Dict[str, str] = field(default_factory=dict)

    @property
    def synthetic(self) -> bool:
        return self.variant in SYNTHETIC

    def gen_model(self, K: float) -> GenModel:
        if self.variant == "csbm":
            return GenModel.csbm(n=self.n, p=self.p, q=self.q, K=K, d=self.d, sigma=self.sigma)
        if self.variant == "cba":
            return GenModel.cba(n=self.n, m=self.m, K=K, omega=self.omega, d=self.d, sigma=self.sigma)
        raise ConfigError("real graphs have no generative model")


@dataclass(frozen=True)
class ClassifierSpec:
    """``tag`` is an architecture (MLP, SGC, GCN), ``<arch>+LP``, ``LP`` or ``bayes``."""

    tag: str
    train: TrainConfig = TrainConfig()
    lp: LPConfig = LPConfig()
    hidden_dim: int = 64
    hops: int = 2
    val_split: float = 0.2

    @property
    def architecture(self) -> Optional[str]:
        arch = self.tag.split("+")[0]
        return arch if arch in ARCHITECTURES else None

    @property
    def uses_lp(self) -> bool:
        return self.tag == LP_ONLY or self.tag.endswith("+LP")

    @property
    def is_bayes(self) -> bool:
        return self.tag == BAYES


@dataclass(frozen=True)
class AttackSpec:
    tag: str
    budgets: Tuple[BudgetSpec, ...] = (BudgetSpec.degree(),)
    candidate_pool: Optional[int] = None
    target_class: Optional[int] = None


@dataclass(frozen=True)
class MetricOptions:
    beta: float = 1.0


@dataclass(frozen=True)
class OutputOptions:
    dir: str = "results"
    formats: Tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    model: ModelSpec = ModelSpec()
    ks: Tuple[float, ...] = DEFAULT_KS
    seeds: int = 10
    test_nodes: int = 1000
    base_seed: int = 0
    classifiers: Tuple[ClassifierSpec, ...] = (ClassifierSpec("GCN"),)
    attacks: Tuple[AttackSpec, ...] = (AttackSpec("l2-weak"),)
    metrics: MetricOptions = MetricOptions()
    output: OutputOptions = OutputOptions()
    plugins: Tuple[str, ...] = ()
    workers: int = 1
    profile: str = "full"

    def seed_list(self) -> Tuple[int, ...]:
        return tuple(self.base_seed + s for s in range(self.seeds))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["attacks"] = [
            {**{k: v for k, v in asdict(a).items() if k != "budgets"}, "budgets": [b.label for b in a.budgets]}
            for a in self.attacks
        ]
        return data

    def config_hash(self) -> str:
        """Hash of everything that determines the numbers; output location and worker count excluded."""
        data = self.to_dict()
        data.pop("output")
        data.pop("workers")
        return stable_hash(data)


_FORMATS = ("csv", "json", "svg")


def _check_keys(data: Mapping[str, Any], allowed: Iterable[str], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _section(data: Mapping[str, Any], key: str, where: str) -> Dict[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{where}.{key} must be an object")
    return value


def _dataclass_from(cls, data: Mapping[str, Any], where: str, **convert):
    _check_keys(data, cls.__dataclass_fields__, where)
    kwargs = {k: convert[k](v) if k in convert else v for k, v in data.items()}
    return cls(**kwargs)


def _model_spec(data: Mapping[str, Any]) -> ModelSpec:
    spec = _dataclass_from(
        ModelSpec,
        data,
        "model",
        variant=lambda v: str(v).lower(),
        omega=lambda om: tuple(tuple(float(x) for x in row) for row in om),
        files=lambda f: {str(k): str(v) for k, v in dict(f).items()},
    )
    if spec.variant not in SYNTHETIC + (REAL,):
        raise ConfigError(f"model.variant must be one of csbm, cba, real; got {spec.variant!r}")
    if spec.variant == REAL:
        missing = {"edges", "features", "labels"} - set(spec.files)
        if missing:
            raise ConfigError(f"model.files is missing {sorted(missing)}")
    return spec


def _classifier_spec(data: Any) -> ClassifierSpec:
    if isinstance(data, str):
        data = {"tag": data}
    spec = _dataclass_from(
        ClassifierSpec,
        data,
        "classifiers[]",
        train=lambda t: _dataclass_from(TrainConfig, t, "classifiers[].train"),
        lp=lambda t: _dataclass_from(LPConfig, t, "classifiers[].lp"),
    )
    known = spec.is_bayes or spec.tag == LP_ONLY or (
        spec.architecture is not None and spec.tag in (spec.architecture, f"{spec.architecture}+LP")
    )
    if not known:
        raise ConfigError(f"unknown classifier tag {spec.tag!r}")
    return spec


def _attack_spec(data: Any) -> AttackSpec:
    if isinstance(data, str):
        data = {"tag": data}
    return _dataclass_from(
        AttackSpec,
        data,
        "attacks[]",
        budgets=lambda bs: tuple(BudgetSpec.parse(b) for b in bs),
    )


def parse_config(data: Mapping[str, Any], *, profile: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(data, ExperimentConfig.__dataclass_fields__, "config")
    try:
        cfg = ExperimentConfig(
            name=str(data.get("name", "experiment")),
            model=_model_spec(_section(data, "model", "config")),
            ks=tuple(float(k) for k in data.get("ks", DEFAULT_KS)),
            seeds=int(data.get("seeds", PROFILES["full"]["seeds"])),
            test_nodes=int(data.get("test_nodes", PROFILES["full"]["test_nodes"])),
            base_seed=int(data.get("base_seed", 0)),
            classifiers=tuple(_classifier_spec(c) for c in data.get("classifiers", ["GCN"])),
            attacks=tuple(_attack_spec(a) for a in data.get("attacks", ["l2-weak"])),
            metrics=_dataclass_from(MetricOptions, _section(data, "metrics", "config"), "metrics"),
            output=_dataclass_from(
                OutputOptions,
                _section(data, "output", "config"),
                "output",
                formats=lambda fs: tuple(str(f).lower() for f in fs),
            ),
            plugins=tuple(str(p) for p in data.get("plugins", ())),
            workers=int(data.get("workers", 1)),
            profile=str(data.get("profile", "full")),
        )
    except ConfigError:
        raise
    except (RobustLensError, TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"invalid config: {e}") from e

    if profile is not None:
        cfg = apply_profile(cfg, profile)
    if seed is not None:
        cfg = replace(cfg, base_seed=int(seed))
    validate_config(cfg)
    return cfg


def apply_profile(cfg: ExperimentConfig, profile: str) -> ExperimentConfig:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    return replace(cfg, profile=profile, **PROFILES[profile])


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.model.synthetic and not cfg.ks:
        raise ConfigError("synthetic runs need a nonempty K list")
    if cfg.seeds < 1 or cfg.test_nodes < 1 or cfg.workers < 1:
        raise ConfigError("seeds, test_nodes and workers must be positive")
    if not cfg.classifiers or not cfg.attacks:
        raise ConfigError("at least one classifier and one attack are required")
    if cfg.metrics.beta <= 0:
        raise ConfigError("metrics.beta must be positive")
    bad = [f for f in cfg.output.formats if f not in _FORMATS]
    if bad:
        raise ConfigError(f"unknown output format(s) {bad}; choose from {list(_FORMATS)}")
    if cfg.profile not in PROFILES:
        raise ConfigError(f"unknown profile {cfg.profile!r}")
    if not cfg.model.synthetic and any(c.is_bayes for c in cfg.classifiers):
        raise ConfigError("the bayes classifier needs a synthetic model")


def load_config(path: str | Path | None, *, profile: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    if not path:
        cfg = ExperimentConfig()
        if profile is not None:
            cfg = apply_profile(cfg, profile)
        if seed is not None:
            cfg = replace(cfg, base_seed=int(seed))
        validate_config(cfg)
        return cfg

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Config file not found: {p}")

    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from e
    return parse_config(data, profile=profile, seed=seed)


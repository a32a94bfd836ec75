"""Run configuration: JSON schema, defaults, validation, canonical hashing.

Unknown keys are rejected; every violation names the offending key and the
constraint. The canonical serialization (sorted keys, no whitespace) defines
``config_hash``, which artifacts embed. Output locations are CLI concerns
and never enter the hash.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from types import SimpleNamespace

from .ioutil import canonical_hash
from .model.config import ModelConfig


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    vocab_size: int = 20
    feature_dim: int = 16
    generic_speakers: int = 20
    warp_strength: float = 0.3
    # target/non-target speakers are unseen-dialect stand-ins: a stronger warp
    # puts them outside the generic training distribution
    target_warp_strength: float = 1.3
    obs_noise: float = 0.15
    p_sub: float = 0.10
    warp_jitter: float = 0.10
    generic_train: int = 4000
    generic_test: int = 400
    generic_cal: int = 100  # held-out sample for gate calibration
    personal_train: int = 40
    personal_test: int = 80
    synthetic_size: int = 2000
    text_pool_size: int = 500
    transcript_min: int = 4
    transcript_max: int = 12


_FROZEN_BY_STAGE = {
    "stage1": (),
    "stage2": ("backbone",),
    "stage3": ("backbone",),
    "stage4": ("adapters", "gate"),
}


@dataclass
class StageConfig:
    stage: str
    beta: float
    lr: float
    epochs: int
    batch_size: int
    kl_batch_size: int = 8
    seed: int = 0

    @property
    def frozen_sets(self) -> tuple[str, ...]:
        return _FROZEN_BY_STAGE.get(self.stage, ())


@dataclass
class BaselineConfig:
    backbone_lr: float = 1e-4
    adapter_lr: float = 1.5e-3
    beta: float = 0.01
    epochs: int = 3
    batch_size: int = 16
    kl_batch_size: int = 8


@dataclass
class ExperimentConfig:
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    target_speakers: list[str] = field(default_factory=lambda: ["tgt-0", "tgt-1"])
    nontarget_speakers: list[str] = field(default_factory=lambda: ["alt-0", "alt-1", "alt-2"])
    beta_sweep: list[float] = field(default_factory=lambda: [0.001, 0.01, 0.1, 1.0])
    duration_multipliers: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 1.0, 2.0])


def _default_stages(master_seed: int) -> dict[str, StageConfig]:
    return {
        "stage1": StageConfig("stage1", beta=0.0, lr=2e-3, epochs=3, batch_size=16, seed=master_seed),
        "stage2": StageConfig("stage2", beta=0.0, lr=1.5e-3, epochs=20, batch_size=8, seed=master_seed),
        "stage3": StageConfig("stage3", beta=0.01, lr=1.5e-3, epochs=3, batch_size=16, seed=master_seed),
        "stage4": StageConfig("stage4", beta=0.01, lr=1e-4, epochs=3, batch_size=16, seed=master_seed),
    }


@dataclass
class RunConfig:
    master_seed: int = 12345
    sim: SimConfig = field(default_factory=SimConfig)
    model_blocks: int = 2
    model_hidden: int = 64
    model_bottleneck: int = 8
    stages: dict[str, StageConfig] = field(default_factory=lambda: _default_stages(12345))
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    @property
    def model(self) -> ModelConfig:
        return ModelConfig(
            blocks=self.model_blocks,
            hidden=self.model_hidden,
            bottleneck=self.model_bottleneck,
            vocab_size=self.sim.vocab_size,
            feature_dim=self.sim.feature_dim,
        )

    def stage(self, name: str) -> StageConfig:
        return self.stages[name]

    def to_dict(self) -> dict:
        stage_dicts = {}
        for name, sc in self.stages.items():
            d = asdict(sc)
            d.pop("stage")
            stage_dicts[name] = d
        return {
            "master_seed": self.master_seed,
            "sim": asdict(self.sim),
            "model": {
                "blocks": self.model_blocks,
                "hidden": self.model_hidden,
                "bottleneck": self.model_bottleneck,
            },
            **stage_dicts,
            "baselines": asdict(self.baselines),
            "experiment": asdict(self.experiment),
        }

    @property
    def config_hash(self) -> str:
        return canonical_hash(self.to_dict())

    def with_master_seed(self, master_seed: int) -> "RunConfig":
        """Same settings under a different master seed (stage seeds follow)."""
        doc = self.to_dict()
        doc["master_seed"] = master_seed
        for name in ("stage1", "stage2", "stage3", "stage4"):
            doc[name]["seed"] = master_seed
        return parse_config_dict(doc)

    def baseline_backbone_stage(self, label: str, beta: float = 0.0) -> StageConfig:
        b = self.baselines
        return StageConfig(
            stage=label,
            beta=beta,
            lr=b.backbone_lr,
            epochs=b.epochs,
            batch_size=b.batch_size,
            kl_batch_size=b.kl_batch_size,
            seed=self.master_seed,
        )

    def baseline_adapter_stage(self, label: str) -> StageConfig:
        b = self.baselines
        return StageConfig(
            stage=label,
            beta=0.0,
            lr=b.adapter_lr,
            epochs=b.epochs,
            batch_size=b.batch_size,
            kl_batch_size=b.kl_batch_size,
            seed=self.master_seed,
        )


def _reject_unknown(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r}")


def _take(section: dict, key: str, where: str, kind, constraint=None, rule: str = ""):
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    if constraint is not None and not constraint(value):
        raise ConfigError(f"{where}.{key}: {rule} is required (got {value})")
    return value


def _fill(section: dict, defaults, where: str, rules: dict) -> dict:
    """Validate a flat section against field rules, applying defaults."""
    _reject_unknown(section, rules.keys(), where)
    out = {}
    for key, (kind, constraint, rule) in rules.items():
        if key in section:
            out[key] = _take(section, key, where, kind, constraint, rule)
        else:
            out[key] = getattr(defaults, key)
    return out


_POS = (lambda v: v > 0, "a positive value")
_NONNEG = (lambda v: v >= 0, "a value ≥ 0")
_GE1 = (lambda v: v >= 1, "a value ≥ 1")

_SIM_RULES = {
    "vocab_size": (int, lambda v: v >= 2, "vocab_size ≥ 2"),
    "feature_dim": (int, lambda v: v >= 2, "feature_dim ≥ 2"),
    "generic_speakers": (int, *_GE1),
    "warp_strength": (float, *_NONNEG),
    "target_warp_strength": (float, *_NONNEG),
    "obs_noise": (float, *_NONNEG),
    "p_sub": (float, lambda v: 0.0 <= v <= 1.0, "p_sub in [0, 1]"),
    "warp_jitter": (float, *_NONNEG),
    "generic_train": (int, *_GE1),
    "generic_test": (int, *_GE1),
    "generic_cal": (int, *_GE1),
    "personal_train": (int, *_GE1),
    "personal_test": (int, *_GE1),
    "synthetic_size": (int, *_GE1),
    "text_pool_size": (int, *_GE1),
    "transcript_min": (int, *_GE1),
    "transcript_max": (int, *_GE1),
}

_MODEL_RULES = {
    "blocks": (int, *_GE1),
    "hidden": (int, *_GE1),
    "bottleneck": (int, *_GE1),
}

_STAGE_RULES = {
    "beta": (float, lambda v: v >= 0, "beta ≥ 0"),
    "lr": (float, *_POS),
    "epochs": (int, *_NONNEG),
    "batch_size": (int, *_GE1),
    "kl_batch_size": (int, *_GE1),
    "seed": (int, *_NONNEG),
}

_BASELINE_RULES = {
    "backbone_lr": (float, *_POS),
    "adapter_lr": (float, *_POS),
    "beta": (float, lambda v: v >= 0, "beta ≥ 0"),
    "epochs": (int, *_NONNEG),
    "batch_size": (int, *_GE1),
    "kl_batch_size": (int, *_GE1),
}


def _string_list(section: dict, key: str, where: str, default: list[str]) -> list[str]:
    if key not in section:
        return list(default)
    value = section[key]
    if (
        not isinstance(value, list)
        or not value
        or not all(isinstance(s, str) and s for s in value)
    ):
        raise ConfigError(f"{where}.{key}: a non-empty list of names is required")
    return value


def _number_list(section: dict, key: str, where: str, default: list, *, integral=False):
    if key not in section:
        return list(default)
    value = section[key]
    ok = isinstance(value, list) and bool(value)
    if ok:
        for v in value:
            if isinstance(v, bool) or not isinstance(v, int if integral else (int, float)):
                ok = False
                break
    if not ok:
        raise ConfigError(f"{where}.{key}: a non-empty list of numbers is required")
    return [int(v) if integral else float(v) for v in value]


def parse_config_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    top_allowed = {
        "master_seed", "sim", "model",
        "stage1", "stage2", "stage3", "stage4",
        "baselines", "experiment",
    }
    _reject_unknown(doc, top_allowed, "config")
    master_seed = (
        _take(doc, "master_seed", "config", int, lambda v: v >= 0, "master_seed ≥ 0")
        if "master_seed" in doc
        else 12345
    )

    sim = SimConfig(**_fill(doc.get("sim", {}), SimConfig(), "sim", _SIM_RULES))
    if sim.transcript_min > sim.transcript_max:
        raise ConfigError("sim.transcript_min: must not exceed transcript_max")

    model_defaults = SimpleNamespace(blocks=2, hidden=64, bottleneck=8)
    model_fields = _fill(doc.get("model", {}), model_defaults, "model", _MODEL_RULES)
    if model_fields["bottleneck"] >= model_fields["hidden"]:
        raise ConfigError("model.bottleneck: must be smaller than model.hidden")

    stages = _default_stages(master_seed)
    for name in ("stage1", "stage2", "stage3", "stage4"):
        section = doc.get(name, {})
        defaults = stages[name]
        fields = _fill(section, defaults, name, _STAGE_RULES)
        if "seed" not in section:
            fields["seed"] = master_seed
        stages[name] = StageConfig(stage=name, **fields)

    baselines = BaselineConfig(
        **_fill(doc.get("baselines", {}), BaselineConfig(), "baselines", _BASELINE_RULES)
    )

    exp_section = doc.get("experiment", {})
    _reject_unknown(
        exp_section,
        {"seeds", "target_speakers", "nontarget_speakers", "beta_sweep", "duration_multipliers"},
        "experiment",
    )
    exp_defaults = ExperimentConfig()
    experiment = ExperimentConfig(
        seeds=_number_list(exp_section, "seeds", "experiment", exp_defaults.seeds, integral=True),
        target_speakers=_string_list(
            exp_section, "target_speakers", "experiment", exp_defaults.target_speakers
        ),
        nontarget_speakers=_string_list(
            exp_section, "nontarget_speakers", "experiment", exp_defaults.nontarget_speakers
        ),
        beta_sweep=_number_list(exp_section, "beta_sweep", "experiment", exp_defaults.beta_sweep),
        duration_multipliers=_number_list(
            exp_section, "duration_multipliers", "experiment", exp_defaults.duration_multipliers
        ),
    )
    for b in experiment.beta_sweep:
        if b < 0:
            raise ConfigError("experiment.beta_sweep: beta ≥ 0 is required")
    for m in experiment.duration_multipliers:
        if m < 0:
            raise ConfigError("experiment.duration_multipliers: multipliers must be ≥ 0")
    overlap = set(experiment.target_speakers) & set(experiment.nontarget_speakers)
    if overlap:
        raise ConfigError(
            f"experiment.nontarget_speakers: {sorted(overlap)[0]!r} is already a target speaker"
        )

    cfg = RunConfig(
        master_seed=master_seed,
        sim=sim,
        model_blocks=model_fields["blocks"],
        model_hidden=model_fields["hidden"],
        model_bottleneck=model_fields["bottleneck"],
        stages=stages,
        baselines=baselines,
        experiment=experiment,
    )
    cfg.model  # construct once so dimension errors surface at parse time
    return cfg


def parse_config(path: str | Path | None) -> RunConfig:
    """Load a config file; a missing path or empty document means all defaults."""
    if path is None:
        return parse_config_dict({})
    text = Path(path).read_text()
    if not text.strip():
        return parse_config_dict({})
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from None
    return parse_config_dict(doc)

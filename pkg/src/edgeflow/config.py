"""Experiment configuration: a human-readable YAML key-value tree with a
schema_version key, strict unknown-key rejection, and per-kind validation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = (
    "federated_quantized",
    "federated_aircomp",
    "centralized_scheduling",
    "aircomp_sweep",
    "codebook_build",
)

QUANT_POLICIES = ("hierarchical", "signsgd", "unquantized")


@dataclass
class ChannelConfig:
    mean_snr_db: float = 15.0
    fading: bool = True
    m_r: int = 4
    m_t: int = 3
    streams: int = 2
    noise_variance: float | None = None
    mode: str = "aligned"
    refresh_snr: str = "per_round"  # or "fixed"

    def validate(self):
        if self.m_r < 1 or self.m_t < 1 or self.streams < 1:
            raise ConfigError("channel dimensions must be positive")
        if self.streams > min(self.m_r, self.m_t):
            raise ConfigError(
                f"streams={self.streams} exceeds min(m_r, m_t)="
                f"{min(self.m_r, self.m_t)}"
            )
        if self.mode not in ("raw", "aligned"):
            raise ConfigError(f"unknown aircomp mode {self.mode!r}")
        if self.refresh_snr not in ("per_round", "fixed"):
            raise ConfigError(f"unknown refresh_snr {self.refresh_snr!r}")
        if self.noise_variance is not None and self.noise_variance < 0:
            raise ConfigError("noise_variance must be >= 0")

    def resolved_noise_variance(self) -> float:
        if self.noise_variance is not None:
            return float(self.noise_variance)
        return 10.0 ** (-self.mean_snr_db / 10.0)


@dataclass
class QuantConfig:
    policy: str = "hierarchical"
    blocks: int = 8
    norm_bits: int = 6
    block_bits: int = 4
    hinge_bits: int = 6
    pilot_samples: int = 500
    codebook: str | None = None  # optional pre-built bundle path

    def validate(self):
        if self.policy not in QUANT_POLICIES:
            raise ConfigError(f"unknown quantization policy {self.policy!r}")
        for name in ("blocks", "norm_bits", "block_bits", "hinge_bits"):
            if getattr(self, name) < 1:
                raise ConfigError(f"quantization.{name} must be >= 1")
        if self.codebook is not None and not os.path.exists(self.codebook):
            raise ConfigError(f"codebook file not found: {self.codebook}")


@dataclass
class LearnerConfig:
    arch: str = "logistic"
    feature_dim: int = 64
    hidden: int = 16
    classes: int = 2
    lr: float = 0.05
    init_scale: float = 0.1
    svm_c: float = 10.0
    svm_step0: float = 0.1
    svm_tau: float = 50.0

    def validate(self):
        if self.arch not in ("logistic", "mlp", "linear_hinge"):
            raise ConfigError(f"unknown learner arch {self.arch!r}")
        if self.feature_dim < 1:
            raise ConfigError("learner.feature_dim must be >= 1")
        if self.lr <= 0:
            raise ConfigError("learner.lr must be positive")


@dataclass
class DatasetConfig:
    kind: str = "two_gaussians"
    separation: float = 3.0
    train_per_device: int = 25
    test_size: int = 2000
    # centralized acquisition extras
    pool_per_device: int = 40
    seed_labeled: int = 30
    band_start: float = 0.0
    band_width: float = 0.0  # 0 disables banding (i.i.d. pools)
    band_step: float = 0.0
    # mnist
    images: str | None = None
    labels: str | None = None
    classes: list = field(default_factory=lambda: [3, 5])

    def validate(self):
        if self.kind not in ("two_gaussians", "mnist"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "mnist":
            for path in (self.images, self.labels):
                if path is None:
                    raise ConfigError("mnist dataset needs images and labels paths")
                if not os.path.exists(path):
                    raise ConfigError(f"dataset file not found: {path}")


@dataclass
class SchedulingConfig:
    policy: str = "importance"
    sample_mode: str = "max_pool"  # or "random": one random sample per round
    svm_step0: float = 0.1
    svm_tau: float = 50.0

    def validate(self):
        if self.policy not in ("importance", "channel_aware", "data_aware"):
            raise ConfigError(f"unknown scheduling policy {self.policy!r}")
        if self.sample_mode not in ("max_pool", "random"):
            raise ConfigError(f"unknown sample_mode {self.sample_mode!r}")


@dataclass
class SweepConfig:
    devices: list = field(default_factory=lambda: [2, 5])
    m_r: list = field(default_factory=lambda: [4])
    m_t: list = field(default_factory=lambda: [3])
    streams: list = field(default_factory=lambda: [2])
    snr_db: list = field(default_factory=lambda: [0.0, 10.0, 20.0])
    mode: list = field(default_factory=lambda: ["raw", "aligned"])
    beamformer: list = field(default_factory=lambda: ["centroid"])
    trials: int = 200

    def validate(self):
        if self.trials < 1:
            raise ConfigError("sweep.trials must be >= 1")
        for mode in self.mode:
            if mode not in ("raw", "aligned"):
                raise ConfigError(f"unknown sweep mode {mode!r}")
        for bf in self.beamformer:
            if bf not in ("centroid", "random"):
                raise ConfigError(f"unknown sweep beamformer {bf!r}")
        for m_r in self.m_r:
            for m_t in self.m_t:
                for n in self.streams:
                    if n > min(m_r, m_t):
                        raise ConfigError(
                            f"sweep cell infeasible: streams={n} > "
                            f"min(m_r={m_r}, m_t={m_t})"
                        )


@dataclass
class ExperimentConfig:
    kind: str = "federated_quantized"
    seed: int = 0
    devices: int = 10
    rounds: int = 100
    out: str | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    quantization: QuantConfig = field(default_factory=QuantConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    scheduling: SchedulingConfig = field(default_factory=SchedulingConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def validate(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.devices < 1:
            raise ConfigError("devices must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        self.channel.validate()
        self.quantization.validate()
        self.learner.validate()
        self.dataset.validate()
        self.scheduling.validate()
        self.sweep.validate()


_SECTIONS = {
    "channel": ChannelConfig,
    "quantization": QuantConfig,
    "learner": LearnerConfig,
    "dataset": DatasetConfig,
    "scheduling": SchedulingConfig,
    "sweep": SweepConfig,
}


def _build_section(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"section {prefix!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key: {prefix}.{key}")
    return cls(**data)


def config_from_dict(tree: dict) -> ExperimentConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    tree = dict(tree)
    version = tree.pop("schema_version", None)
    if version is None:
        raise ConfigError("config is missing the schema_version key")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    top_known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in tree.items():
        if key not in top_known:
            raise ConfigError(f"unknown config key: {key}")
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            kwargs[key] = value
    config = ExperimentConfig(**kwargs)
    config.validate()
    return config


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if tree is None:
        raise ConfigError(f"config {path} is empty")
    return config_from_dict(tree)

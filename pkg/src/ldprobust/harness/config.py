"""Experiment configuration: a flat YAML mapping whose keys are field names."""

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..errors import ConfigError, InvalidArgument
from ..federated import LDP_MODES, RoundConfig
from ..mechanisms import ClipSpec, PrivacyBudget

DATASETS = ("mnist", "synthetic", "cifar10")
PATH_FIELDS = ("train_images", "train_labels", "test_images", "test_labels", "out")


def parse_epsilon(value):
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", ".inf", "none", "off"):
            return math.inf
        try:
            value = float(text)
        except ValueError:
            raise ConfigError(f"cannot parse epsilon {value!r}") from None
    try:
        return PrivacyBudget(value).epsilon
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigError(f"bad epsilon {value!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    dataset: str = "mnist"
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    cifar_train: list = field(default_factory=list)
    cifar_test: list = field(default_factory=list)
    n_train: int = 2000
    n_test: int = 500
    hidden_dims: list = field(default_factory=lambda: [64])
    n_clients: int = 10
    local_epochs: int = 1
    batch_size: int = 32
    learning_rate: float = 0.05
    ldp_mode: str = "update_perturbation"
    clip_radius: float = 1.0
    rounds: int = 20
    epsilon_grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0, math.inf])
    n_repeats: int = 5
    alpha: float = 0.1
    master_seed: int = 0
    workers: int = 1
    out: str = "sweep.csv"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.ldp_mode not in LDP_MODES:
            raise ConfigError(f"ldp_mode must be one of {LDP_MODES}, got {self.ldp_mode!r}")
        if not isinstance(self.epsilon_grid, (list, tuple)) or not self.epsilon_grid:
            raise ConfigError("epsilon_grid must be a non-empty list")
        self.epsilon_grid = [parse_epsilon(e) for e in self.epsilon_grid]
        for name in ("n_train", "n_test", "n_clients", "batch_size", "rounds", "n_repeats", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.local_epochs, int) or self.local_epochs < 0:
            raise ConfigError(f"local_epochs must be a non-negative integer, got {self.local_epochs!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError(f"master_seed must be a non-negative integer, got {self.master_seed!r}")
        for name in ("learning_rate", "alpha", "clip_radius"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name} must be a non-negative number, got {value!r}")
        if self.clip_radius == 0:
            raise ConfigError("clip_radius must be positive")
        if not all(isinstance(h, int) and h > 0 for h in self.hidden_dims):
            raise ConfigError(f"hidden_dims must be positive integers, got {self.hidden_dims!r}")
        if self.dataset == "mnist" and not (self.train_images and self.train_labels):
            raise ConfigError("mnist needs train_images and train_labels")
        if self.dataset == "cifar10" and not self.cifar_train:
            raise ConfigError("cifar10 needs cifar_train")
        if bool(self.test_images) != bool(self.test_labels):
            raise ConfigError("test_images and test_labels go together")

    def round_config(self, epsilon):
        return RoundConfig(n_clients=self.n_clients, local_epochs=self.local_epochs,
                           batch_size=self.batch_size, learning_rate=float(self.learning_rate),
                           ldp_mode=self.ldp_mode, budget=PrivacyBudget(epsilon),
                           clip=ClipSpec(float(self.clip_radius)), rounds=self.rounds)

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def load_config(path):
    """Read a config file; relative paths inside it resolve against its directory."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a flat key-value mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    for key in PATH_FIELDS:
        if raw.get(key):
            raw[key] = str((path.parent / raw[key]).resolve()) if not Path(raw[key]).is_absolute() else raw[key]
    for key in ("cifar_train", "cifar_test"):
        if key in raw:
            raw[key] = [str(p if Path(p).is_absolute() else (path.parent / p).resolve()) for p in raw[key]]
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

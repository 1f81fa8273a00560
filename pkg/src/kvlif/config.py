"""Experiment configuration: defaults, named presets, file loading and validation.

Precedence, lowest first: built-in defaults, the named preset, the config
file, command-line flags.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .encoding import NOISE_KINDS, NoiseSpec
from .neurons import NEURON_KINDS, NeuronParams, paper_params

SCHEMA_VERSION = 1
EXPERIMENTS = ("dynamics", "sweep", "train", "robustness", "energy", "shortwindow")


class ConfigError(ValueError):
    pass


# Per-dataset training hyperparameters; only the numbers are borrowed,
# the data stays toy-sized whatever preset is chosen.
PRESETS = {
    "cifar10": {
        "train": {"batch_size": 128, "epochs": 200, "lr": 0.1, "optimizer": "sgd", "weight_decay": 5e-5},
        "params": {"alpha": 0.8, "beta": 0.3, "gamma": 0.05},
    },
    "cifar100": {
        "train": {"batch_size": 128, "epochs": 300, "lr": 0.1, "optimizer": "sgd", "weight_decay": 5e-4},
        "params": {"alpha": 0.8, "beta": 0.1, "gamma": 0.05},
    },
    "tiny": {
        "train": {"batch_size": 256, "epochs": 300, "lr": 0.1, "optimizer": "sgd", "weight_decay": 5e-4},
        "params": {"alpha": 0.8, "beta": 0.3, "gamma": 0.05},
    },
    "cifar10-dvs": {
        "train": {"batch_size": 128, "epochs": 200, "lr": 0.05, "optimizer": "sgd", "weight_decay": 5e-4},
        "params": {"alpha": 0.8, "beta": 0.1, "gamma": 0.05},
    },
    "dvs-gesture": {
        "train": {"batch_size": 16, "epochs": 150, "lr": 5e-4, "optimizer": "adam", "weight_decay": 0.0},
        "params": {"alpha": 0.8, "beta": 0.3, "gamma": 0.05},
    },
    "toy": {
        "train": {"batch_size": 32, "epochs": 50, "lr": 5e-3, "optimizer": "adam", "weight_decay": 0.0},
        "params": {"alpha": 0.8, "beta": 0.3, "gamma": 0.05},
    },
}


@dataclass
class DatasetConfig:
    kind: str = "two_rate"  # two_rate | moving_bar | idx
    n_train: int = 512
    n_test: int = 256
    n_features: int = 4
    low: float = 0.2
    high: float = 0.6
    size: int = 8
    background: float = 0.02
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None


@dataclass
class TrainConfig:
    epochs: int = 50
    lr: float = 5e-3
    batch_size: int = 32
    optimizer: str = "adam"
    momentum: float = 0.9
    weight_decay: float = 0.0
    loss: str = "ce"
    tet_lambda: float = 0.05
    precision: str = "float64"


@dataclass
class NoiseConfig:
    kind: str = "gaussian_static"
    levels: list = field(default_factory=lambda: [0.04, 0.08, 0.12, 0.16, 0.20])
    std: float = 0.5  # pixel_event amplitude


@dataclass
class DynamicsConfig:
    input: str = "poisson"  # poisson | constant | zero
    intensity: float = 0.5
    weight: float = 1.2
    T: int = 40
    sweep_intensities: list = field(default_factory=lambda: [0.5, 1.0, 1.2, 1.4, 1.6, 2.0, 3.0, 4.0, 5.0])
    sweep_T: int = 8
    event_amp: float = 1.8
    noise_amp: float = 0.7


@dataclass
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    experiment: str = "train"
    preset: str = "toy"
    neurons: list = field(default_factory=lambda: list(NEURON_KINDS))
    params: dict = field(default_factory=dict)
    hidden: list = field(default_factory=lambda: [32])
    T: int = 8
    seed: int = 7
    readout_decay: float = 0.5
    kvlif_macs_per_step: int = 4
    shortwindow_T: list = field(default_factory=lambda: [1, 2, 4, 6, 8])
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)

    def neuron_params(self) -> NeuronParams:
        try:
            return NeuronParams.from_dict({**paper_params().to_dict(), **self.params})
        except TypeError as e:
            raise ConfigError(f"bad neuron parameter override: {e}") from None
        except ValueError as e:
            raise ConfigError(f"invalid neuron parameters: {e}") from None

    def noise_specs(self) -> list[NoiseSpec]:
        try:
            return [NoiseSpec(self.noise.kind, float(lv), seed=self.seed, std=self.noise.std) for lv in self.noise.levels]
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; this build reads {SCHEMA_VERSION}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {tuple(PRESETS)}")
        if not self.neurons:
            raise ConfigError("at least one neuron kind is required")
        for kind in self.neurons:
            if kind not in NEURON_KINDS:
                raise ConfigError(f"unknown neuron kind {kind!r}; expected one of {NEURON_KINDS}")
        self.neuron_params()
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if not self.hidden or any(int(h) < 1 for h in self.hidden):
            raise ConfigError(f"hidden widths must be positive, got {self.hidden}")
        if not 0.0 <= self.readout_decay < 1.0:
            raise ConfigError(f"readout_decay must lie in [0, 1), got {self.readout_decay}")
        if self.kvlif_macs_per_step < 0:
            raise ConfigError("kvlif_macs_per_step must be non-negative")
        if any(not 1 <= t <= self.T for t in self.shortwindow_T):
            raise ConfigError(f"shortwindow_T entries must lie in [1, T={self.T}], got {self.shortwindow_T}")
        d = self.dataset
        if d.kind not in ("two_rate", "moving_bar", "idx"):
            raise ConfigError(f"unknown dataset kind {d.kind!r}")
        if d.n_train < 1 or d.n_test < 1:
            raise ConfigError("dataset sizes must be positive")
        if d.kind == "idx" and not (d.train_images and d.train_labels and d.test_images and d.test_labels):
            raise ConfigError("idx datasets need train_images, train_labels, test_images and test_labels")
        if not (0.0 <= d.low <= 1.0 and 0.0 <= d.high <= 1.0):
            raise ConfigError("two_rate intensities must lie in [0, 1]")
        t = self.train
        if t.epochs < 0 or t.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if t.lr < 0:
            raise ConfigError(f"learning rate must be non-negative, got {t.lr}")
        if t.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {t.optimizer!r}")
        if t.loss not in ("ce", "tet"):
            raise ConfigError(f"unknown loss {t.loss!r}")
        if not 0.0 <= t.tet_lambda <= 1.0:
            raise ConfigError(f"tet_lambda must lie in [0, 1], got {t.tet_lambda}")
        if t.precision not in ("float64", "float32"):
            raise ConfigError(f"precision must be float64 or float32, got {t.precision!r}")
        if self.noise.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.noise.kind!r}; expected one of {NOISE_KINDS}")
        self.noise_specs()
        dy = self.dynamics
        if dy.input not in ("poisson", "constant", "zero"):
            raise ConfigError(f"unknown dynamics input {dy.input!r}")
        if dy.T < 1 or dy.sweep_T < 1:
            raise ConfigError("dynamics T and sweep_T must be >= 1")
        if dy.input == "poisson" and not 0.0 <= dy.intensity <= 1.0:
            raise ConfigError(f"poisson intensity must lie in [0, 1], got {dy.intensity}")
        if any(v < 0 for v in dy.sweep_intensities):
            raise ConfigError("sweep intensities must be non-negative")
        return self


def _coerce(name: str, default, value):
    """Check ``value`` against the type of the field's default; numbers may be written as strings."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, float):
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                pass
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, (list, dict)):
        ok = isinstance(value, type(default))
    else:  # str or optional str
        ok = value is None and default is None or isinstance(value, str)
    if not ok:
        raise ConfigError(f"{name}: expected {type(default).__name__}, got {value!r}")
    return value


def _from_dict(cls, data: dict, where: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(where + k for k in unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _from_dict(type(default), value, f"{where}{name}.")
        else:
            kwargs[name] = _coerce(where + name, default, value)
    return cls(**kwargs)


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "params":
            out[key] = deep_merge(out[key], value)
        elif isinstance(value, dict) and key == "params":
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{path}: cannot parse config: {e}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def resolve_config(file_data: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Combine defaults, preset, file contents and flag overrides into a validated config."""
    file_data = file_data or {}
    overrides = overrides or {}
    preset = overrides.get("preset") or file_data.get("preset") or "toy"
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {tuple(PRESETS)}")
    merged = deep_merge(asdict(ExperimentConfig()), PRESETS[preset])
    merged = deep_merge(merged, file_data)
    merged = deep_merge(merged, overrides)
    merged["preset"] = preset
    return config_from_dict(merged)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Rebuild a config exactly as embedded in a manifest (no preset re-application)."""
    try:
        return _from_dict(ExperimentConfig, data).validate()
    except TypeError as e:
        raise ConfigError(f"malformed config value: {e}") from None

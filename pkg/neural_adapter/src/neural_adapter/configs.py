"""Training configurations and their defaults.

Both dataclasses serialize to plain JSON next to the model artifact, so
a saved run records exactly what it was trained with, including the
settings the training library filled in implicitly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

CODES = ("intrinsic", "extrinsic")
OPTIMIZERS = ("adamw", "adam", "sgd")
CLASSIFIER_TOKEN_LIMITS = (128, 512)


def _positive(name: str, value, kind=int):
    if not isinstance(value, kind) or isinstance(value, bool) or value <= 0:
        raise ConfigError(f"{name} must be a positive {kind.__name__}, got {value!r}")


@dataclass(frozen=True)
class GeneratorTrainingConfig:
    """Seq2seq fine-tuning and decoding settings."""

    model_name: str = "t5-base"
    epochs: int = 3
    batch_size: int = 24
    optimizer: str = "adamw"
    learning_rate: float = 3e-5
    max_source_length: int = 256
    max_target_length: int = 42
    seed: int = 11
    beam_size: int = 2
    min_length: int = 10
    max_length: int = 60
    repetition_penalty: float = 2.5
    length_penalty: float = 1.0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "max_source_length",
                     "max_target_length", "beam_size", "min_length", "max_length"):
            _positive(name, getattr(self, name))
        _positive("learning_rate", self.learning_rate, kind=float)
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"unknown optimizer {self.optimizer!r}; pick one of {OPTIMIZERS}")
        if self.min_length > self.max_length:
            raise ConfigError(
                f"min_length {self.min_length} exceeds max_length {self.max_length}")
        if self.repetition_penalty <= 0 or self.length_penalty < 0:
            raise ConfigError("decode penalties must be positive")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorTrainingConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorTrainingConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ClassifierTrainingConfig:
    """Pair-classification fine-tuning settings."""

    model_name: str = "roberta-base"
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 1e-5
    max_input_tokens: int = 512
    seeds: tuple[int, ...] = (11, 12, 13, 14, 15)

    def __post_init__(self):
        _positive("epochs", self.epochs)
        _positive("batch_size", self.batch_size)
        _positive("learning_rate", self.learning_rate, kind=float)
        if self.max_input_tokens not in CLASSIFIER_TOKEN_LIMITS:
            raise ConfigError(
                f"max_input_tokens must be one of {CLASSIFIER_TOKEN_LIMITS}, "
                f"got {self.max_input_tokens}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def to_json(self) -> dict:
        data = dataclasses.asdict(self)
        data["seeds"] = list(self.seeds)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ClassifierTrainingConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown classifier config keys: {sorted(unknown)}")
        if "seeds" in data:
            data = dict(data, seeds=tuple(data["seeds"]))
        return cls(**data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierTrainingConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

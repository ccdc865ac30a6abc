"""Model-backed generation and scoring over the falsesum file contracts."""

from .classifier import train_and_score_classifier
from .configs import ClassifierTrainingConfig, GeneratorTrainingConfig
from .errors import AdapterError, ConfigError, ContractError
from .generator import generate, train_generator

__all__ = [
    "AdapterError",
    "ClassifierTrainingConfig",
    "ConfigError",
    "ContractError",
    "GeneratorTrainingConfig",
    "generate",
    "train_and_score_classifier",
    "train_generator",
]

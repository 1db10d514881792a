"""Probabilistic moving-horizon estimation with privacy budgets."""

from . import (
    cost,
    exceptions,
    experiments,
    kl,
    messages,
    model,
    observability,
    oracle,
    plugins,
    privacy,
    w2,
)
from ._config import ExperimentConfig, Parser
from ._core import pymhe
from ._main import main
from ._version import __version__

__all__ = [
    "ExperimentConfig",
    "Parser",
    "__version__",
    "cost",
    "exceptions",
    "experiments",
    "kl",
    "main",
    "messages",
    "model",
    "observability",
    "oracle",
    "plugins",
    "privacy",
    "pymhe",
    "w2",
]

"""Adaptive tensor tree generative models."""

from ._ttree import *  # noqa: F401,F403
from ._ttree import ConfigError, IoError, NumericalError, TensorTree, TrainConfig

__version__ = "0.1.0"

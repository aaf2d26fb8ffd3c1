"""Monte-Carlo and deterministic experiments on the linear and nonlinear flows."""

from .config import ExperimentConfig, admissible_s_range, default_config, from_document, load_config
from .report import ExperimentReport

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "admissible_s_range",
    "default_config",
    "from_document",
    "load_config",
]

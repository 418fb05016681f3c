"""Uniform strategy synthesis for imperfect-information concurrent games.

The pipeline starts from a perfect-information winning strategy and
repairs it, one information set at a time, towards a uniform one.
"""

from .model import Model, ModelError, PreconditionError, ReachabilityGoal, load_model, save_model, validate_model
from .optimizer import OptimizationTrace, OptimizerConfig, optimize, optimize_coal
from .strategy import StrategyProfile, verify_uniform, verify_winning
from .synthesis import strat_synth

__all__ = [
    "Model",
    "ModelError",
    "OptimizationTrace",
    "OptimizerConfig",
    "PreconditionError",
    "ReachabilityGoal",
    "StrategyProfile",
    "load_model",
    "optimize",
    "optimize_coal",
    "save_model",
    "strat_synth",
    "validate_model",
    "verify_uniform",
    "verify_winning",
]

"""Hierarchical subgoal search over Rubik's Cube and Sokoban."""

from .components.base import ComponentBundle
from .search import (STRATEGIES, ConfigError, PlannerConfig, SearchStats, SolveOutcome, Status,
                     reconstruct_low_level_path, run_cllp, solve, validate_outcome, verify_subgoal)

__version__ = "0.1.0"

__all__ = [
    "STRATEGIES", "ComponentBundle", "ConfigError", "PlannerConfig", "SearchStats", "SolveOutcome",
    "Status", "reconstruct_low_level_path", "run_cllp", "solve", "validate_outcome", "verify_subgoal",
]

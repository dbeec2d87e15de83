"""Collaborative bandits with hott items.

Thin wrapper over the C++ core: instance generators, gap diagnostics, the
five policies and the experiment runner.
"""

from ._core import (
    ConfigError,
    ContractViolation,
    GenerationError,
    ParameterError,
    RewardModel,
    accept,
    best_worst_items,
    block_instance,
    compute_gaps,
    eq7_instance,
    load_instance,
    plot_csv,
    run_config,
    simplex_instance,
    simulate,
    verify_hott,
)

POLICIES = ("pce", "detelim", "etc", "am", "pes")

__all__ = [
    "ConfigError",
    "ContractViolation",
    "GenerationError",
    "ParameterError",
    "RewardModel",
    "POLICIES",
    "accept",
    "best_worst_items",
    "block_instance",
    "compute_gaps",
    "eq7_instance",
    "load_instance",
    "plot_csv",
    "run_config",
    "simplex_instance",
    "simulate",
    "verify_hott",
]

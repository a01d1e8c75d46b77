"""Coordinated cyber-physical deception as a strong Stackelberg game."""
from __future__ import annotations

__version__ = "0.1.0"

from .analysis import compare_baselines, compare_layers, most_critical_vulnerability, sweep
from .kernels import BACKEND
from .payoff import PayoffMatrices, build_payoff_matrices, build_profiles
from .scenario import Scenario, load_scenario, paper_fixture, restrict_layer
from .solver import (
    brute_force_sse,
    evaluate_strategy,
    greedy_strategy,
    solve_stackelberg,
    uniform_strategy,
)

__all__ = [
    "BACKEND",
    "PayoffMatrices",
    "Scenario",
    "brute_force_sse",
    "build_payoff_matrices",
    "build_profiles",
    "compare_baselines",
    "compare_layers",
    "evaluate_strategy",
    "greedy_strategy",
    "load_scenario",
    "most_critical_vulnerability",
    "paper_fixture",
    "restrict_layer",
    "solve_stackelberg",
    "sweep",
    "uniform_strategy",
]

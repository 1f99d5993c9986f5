"""Scenario definitions, Monte Carlo runs, SINR scoring and the CLI."""
from .complexity import complexity_counts, complexity_report
from .runner import (
    RunResult,
    SinrTrace,
    convergence_index,
    grid_search,
    run_scenario,
    sinr,
    sweep_rank,
)
from .scenario import AlgorithmSpec, ConfigError, Scenario, load_scenario

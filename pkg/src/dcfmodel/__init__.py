"""Throughput of 802.11 DCF under non-saturated traffic, channel errors and capture."""

from .config import (ChannelParams, ConfigError, MacParams, Scenario, SolverConfig,
                     TrafficParams, load_scenario, parse_scenario, save_scenario)
from .solver import ModelSolution, NonConvergence, model_throughput, solve_fixed_point

__all__ = [
    "ChannelParams", "ConfigError", "MacParams", "Scenario", "SolverConfig",
    "TrafficParams", "load_scenario", "parse_scenario", "save_scenario",
    "ModelSolution", "NonConvergence", "model_throughput", "solve_fixed_point",
]

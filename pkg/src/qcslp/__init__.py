"""Exact charging-station placement with Grover adaptive search on a
statevector simulator, checked against brute force."""

from .gas import GasConfig, GasOutcome, repeat_solve, solve_cslp
from .net import Network, StationCombination, brute_force_optimum, builtin_network, is_valid, load_network

__all__ = [
    "GasConfig",
    "GasOutcome",
    "Network",
    "StationCombination",
    "brute_force_optimum",
    "builtin_network",
    "is_valid",
    "load_network",
    "repeat_solve",
    "solve_cslp",
]

"""Rolling Nash equilibrium control for two-person zero-sum differential games."""

from .dynamics import GameSystem, PayoffKind, benchmark_system, euler_step, payoff_rate, simulate
from .grid import GridSpec, ValueKind, ValueTable, interpolate, load_table, save_table
from .matrix_game import ActionAbstraction, NashSolution, regret_matching_solve, uniform_abstraction
from .value_iteration import SweepConfig, gap_map, run, sweep_once

__version__ = "0.1.0"

__all__ = [
    "ActionAbstraction",
    "GameSystem",
    "GridSpec",
    "NashSolution",
    "PayoffKind",
    "SweepConfig",
    "ValueKind",
    "ValueTable",
    "benchmark_system",
    "euler_step",
    "gap_map",
    "interpolate",
    "load_table",
    "payoff_rate",
    "regret_matching_solve",
    "run",
    "save_table",
    "simulate",
    "sweep_once",
    "uniform_abstraction",
]

"""Grid value iteration for the upper, lower and Nash state-value functions.

Each sweep turns every grid state into a stage game

    G[i][j] = l(x, a_i, b_j) * dt + V(F(x, a_i, b_j))

and writes its pure min-max value (upper), pure max-min value (lower) or
regret-matching equilibrium value (Nash) into a fresh table. Starting from
the zero table, ``m`` sweeps give the ``m * dt`` horizon value.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GameSystem, euler_step, payoff_rate
from .grid import GridSpec, ValueKind, ValueTable, interpolate
from .matrix_game import (
    DEFAULT_RM_ITERATIONS,
    DEFAULT_RM_TOLERANCE,
    ActionAbstraction,
    InvalidMatrixError,
    solve_batch,
)

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 2048


@dataclass(frozen=True)
class SweepConfig:
    system: GameSystem
    grid: GridSpec
    abstraction: ActionAbstraction
    m: int
    kind: ValueKind = ValueKind.NASH
    rm_iterations: int = DEFAULT_RM_ITERATIONS
    rm_tolerance: float = DEFAULT_RM_TOLERANCE
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"recursion count m must be >= 1, got {self.m}")
        if self.rm_iterations < 1:
            raise ValueError("rm_iterations must be >= 1")
        object.__setattr__(self, "kind", ValueKind(self.kind))


@dataclass
class SweepDiagnostics:
    max_delta: list[float] = field(default_factory=list)
    max_exploitability: list[float] = field(default_factory=list)
    max_clamp_distance: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)

    def record(self, stats: dict) -> None:
        self.max_delta.append(stats["max_delta"])
        self.max_exploitability.append(stats["max_exploit"])
        self.max_clamp_distance.append(stats["max_clamp"])
        self.wall_time.append(stats["wall_time"])

    def __len__(self):
        return len(self.max_delta)


def stage_matrices(system: GameSystem, abstraction: ActionAbstraction, table: ValueTable, states):
    """Stage-game matrices for a stack of states.

    ``states`` has shape ``(n, 2)``; returns ``(G, clamp)`` where ``G`` is
    ``(n, Na, Nb)`` and ``clamp`` is the largest distance by which a
    successor state falls outside the table's domain.
    """
    xs = np.asarray(states, dtype=np.float64)[:, None, None, :]
    a = abstraction.actions_a[None, :, None]
    b = abstraction.actions_b[None, None, :]
    nxt = euler_step(system, xs, a, b)
    clamp = float(np.max(np.linalg.norm(nxt - table.spec.clamp(nxt), axis=-1), initial=0.0))
    g = payoff_rate(system, xs, a, b) * system.dt + interpolate(table, nxt)
    return np.broadcast_to(g, (xs.shape[0], abstraction.n_a, abstraction.n_b)), clamp


def check_stage_stack(g: np.ndarray, states: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(g))
    if bad.size:
        k, i, j = bad[0]
        raise InvalidMatrixError(f"non-finite stage entry at (i={i}, j={j}) for state {tuple(states[k])}")


def _sweep(cfg: SweepConfig, v_in: ValueTable) -> tuple[ValueTable, dict]:
    if v_in.spec != cfg.grid:
        raise ValueError("input table grid does not match the sweep configuration")
    t0 = time.perf_counter()
    states = cfg.grid.states().reshape(-1, 2)
    out = np.empty(states.shape[0])
    max_exploit = 0.0
    max_clamp = 0.0
    for start in range(0, states.shape[0], cfg.chunk_size):
        chunk = states[start : start + cfg.chunk_size]
        g, clamp = stage_matrices(cfg.system, cfg.abstraction, v_in, chunk)
        check_stage_stack(g, chunk)
        max_clamp = max(max_clamp, clamp)
        if cfg.kind is ValueKind.UPPER:
            vals = g.max(axis=1).min(axis=1)
        elif cfg.kind is ValueKind.LOWER:
            vals = g.min(axis=2).max(axis=1)
        else:
            _, _, vals, expl = solve_batch(g, cfg.rm_iterations, cfg.rm_tolerance)
            max_exploit = max(max_exploit, float(expl.max()))
        out[start : start + chunk.shape[0]] = vals
    values = out.reshape(cfg.grid.shape)
    table = ValueTable(cfg.grid, values, cfg.kind, v_in.m + 1, cfg.system.dt)
    stats = {
        "max_delta": float(np.max(np.abs(values - v_in.values))),
        "max_exploit": max_exploit,
        "max_clamp": max_clamp,
        "wall_time": time.perf_counter() - t0,
    }
    return table, stats


def sweep_once(cfg: SweepConfig, v_in: ValueTable) -> ValueTable:
    """One recursion step; ``v_in`` is left untouched."""
    return _sweep(cfg, v_in)[0]


def run(cfg: SweepConfig, on_step=None) -> tuple[ValueTable, SweepDiagnostics]:
    """Apply ``cfg.m`` sweeps starting from the zero table.

    ``on_step(k, table)`` is called after each sweep if given.
    """
    table = ValueTable.zeros(cfg.grid, cfg.kind, cfg.system.dt)
    diag = SweepDiagnostics()
    for k in range(1, cfg.m + 1):
        table, stats = _sweep(cfg, table)
        diag.record(stats)
        log.info(
            "step=%d max_delta=%r max_exploit=%r max_clamp=%r",
            k,
            stats["max_delta"],
            stats["max_exploit"],
            stats["max_clamp"],
        )
        if on_step is not None:
            on_step(k, table)
    return table, diag


def gap_map(upper: ValueTable, lower: ValueTable) -> ValueTable:
    """Pointwise ``upper - lower``; positive cells mark where no saddle exists."""
    if upper.spec != lower.spec:
        raise ValueError("tables are on different grids")
    return ValueTable(upper.spec, upper.values - lower.values, ValueKind.UPPER, upper.m, upper.dt)

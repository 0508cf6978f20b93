"""Rolling-horizon control from a stored value table.

At every decision instant the current state is turned into a stage game with
the stored ``(h-1) * dt`` value table as continuation, and the first action
is taken from that game: the equilibrium marginal for ``NASH_RM``, the pure
min-max or max-min optimizer for the two saddle-assuming baselines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import GameSystem
from .grid import ValueKind, ValueTable
from .matrix_game import (
    DEFAULT_RM_ITERATIONS,
    DEFAULT_RM_TOLERANCE,
    ActionAbstraction,
    solve_batch,
)
from .value_iteration import check_stage_stack, stage_matrices

PURITY_THRESHOLD = 0.99


class PolicyKind(str, enum.Enum):
    MIN_MAX = "minmax"
    MAX_MIN = "maxmin"
    NASH_RM = "nash"

    @property
    def table_kind(self) -> ValueKind:
        return {"minmax": ValueKind.UPPER, "maxmin": ValueKind.LOWER, "nash": ValueKind.NASH}[self.value]


class Role(str, enum.Enum):
    PLAYER_I = "I"
    PLAYER_II = "II"


@dataclass(frozen=True, eq=False)
class Policy:
    kind: PolicyKind
    table: ValueTable
    role: Role
    abstraction: ActionAbstraction
    system: GameSystem
    rm_iterations: int = DEFAULT_RM_ITERATIONS
    rm_tolerance: float = DEFAULT_RM_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        object.__setattr__(self, "role", Role(self.role))
        if self.table.kind is not self.kind.table_kind:
            raise ValueError(f"{self.kind.name} policy needs a {self.kind.table_kind.value} table, got {self.table.kind.value}")
        if self.table.dt != self.system.dt:
            raise ValueError(f"table dt={self.table.dt} differs from system dt={self.system.dt}")

    @property
    def actions(self) -> np.ndarray:
        return self.abstraction.actions_a if self.role is Role.PLAYER_I else self.abstraction.actions_b

    def with_role(self, role) -> "Policy":
        return Policy(self.kind, self.table, role, self.abstraction, self.system, self.rm_iterations, self.rm_tolerance)


@dataclass(frozen=True)
class StageSolution:
    """Both players' marginals for a stack of states (the role picks one)."""

    dist_a: np.ndarray
    dist_b: np.ndarray
    values: np.ndarray
    exploitability: np.ndarray
    matrices: np.ndarray


@dataclass(frozen=True)
class ControlDecision:
    distribution: np.ndarray
    actions: np.ndarray
    sampled_index: int
    sampled_action: float
    role: Role
    value: float
    exploitability: float
    stage_matrix: np.ndarray | None = None
    other_distribution: np.ndarray | None = None


def _point_masses(idx: np.ndarray, n: int) -> np.ndarray:
    d = np.zeros((idx.size, n))
    d[np.arange(idx.size), idx] = 1.0
    return d


def solve_stage(policy: Policy, states) -> StageSolution:
    """Build and solve the stage game at each of ``states`` (shape ``(n, 2)``).

    Pure kinds return point masses: for ``MIN_MAX`` the minimizing column and
    the best-response row of that column, for ``MAX_MIN`` the maximizing row
    and the best-response column of that row. Ties go to the lowest index.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    g, _ = stage_matrices(policy.system, policy.abstraction, policy.table, states)
    g = np.ascontiguousarray(g)
    check_stage_stack(g, states)
    n, na, nb = g.shape
    rows = np.arange(n)
    if policy.kind is PolicyKind.NASH_RM:
        da, db, vals, expl = solve_batch(g, policy.rm_iterations, policy.rm_tolerance)
        return StageSolution(da, db, vals, expl, g)
    if policy.kind is PolicyKind.MIN_MAX:
        col_max = g.max(axis=1)
        j = np.argmin(col_max, axis=1)
        i = np.argmax(g[rows, :, j], axis=1)
    else:
        row_min = g.min(axis=2)
        i = np.argmax(row_min, axis=1)
        j = np.argmin(g[rows, i, :], axis=1)
    da = _point_masses(i, na)
    db = _point_masses(j, nb)
    vals = g[rows, i, j]
    # Exploitability of the pure pair, for reporting only.
    expl = np.maximum(g[rows, :, j].max(axis=1) - vals, 0) + np.maximum(vals - g[rows, i, :].min(axis=1), 0)
    return StageSolution(da, db, vals, expl, g)


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of one index; consumes exactly one uniform."""
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), probs.size - 1))


def decide(policy: Policy, x, rng_seed=None, keep_matrix: bool = False) -> ControlDecision:
    """Control decision of ``policy`` at state ``x``.

    ``rng_seed`` may be an int, ``None`` or a ``numpy.random.Generator``;
    the same seed and state always give the same decision.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,) or not np.all(np.isfinite(x)):
        raise ValueError(f"state must be a finite 2-vector, got {x!r}")
    sol = solve_stage(policy, x[None, :])
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    mine, other = (sol.dist_a[0], sol.dist_b[0]) if policy.role is Role.PLAYER_I else (sol.dist_b[0], sol.dist_a[0])
    k = sample_index(mine, rng)
    return ControlDecision(
        distribution=mine,
        actions=policy.actions,
        sampled_index=k,
        sampled_action=float(policy.actions[k]),
        role=policy.role,
        value=float(sol.values[0]),
        exploitability=float(sol.exploitability[0]),
        stage_matrix=sol.matrices[0].copy() if keep_matrix else None,
        other_distribution=other,
    )


def pure_action(decision: ControlDecision, threshold: float = PURITY_THRESHOLD) -> float | None:
    """The action carrying at least ``threshold`` mass, or ``None`` if mixed."""
    k = int(np.argmax(decision.distribution))
    if decision.distribution[k] >= threshold:
        return float(decision.actions[k])
    return None


def mass_near(distribution: np.ndarray, actions: np.ndarray, target: float, radius: float) -> float:
    """Probability mass on actions within ``radius`` of ``target``."""
    return float(distribution[np.abs(actions - target) <= radius + 1e-12].sum())

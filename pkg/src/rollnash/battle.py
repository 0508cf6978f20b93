"""Head-to-head battles between rolling-horizon policies.

Episodes start from uniformly drawn states and run for a fixed duration.
Each episode's randomness comes from ``SeedSequence([master_seed, index])``
split into three streams: initial state, player I sampling, player II
sampling. Episodes are advanced in lock-step so stage games for all live
episodes are built and solved as one batch; results do not depend on which
other episodes share the batch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .control import Policy, PolicyKind, Role, StageSolution, sample_index, solve_stage
from .dynamics import GameSystem, euler_step, payoff_rate, steps_in
from .grid import GridSpec, ValueKind, ValueTable
from .matrix_game import DEFAULT_RM_ITERATIONS, DEFAULT_RM_TOLERANCE, ActionAbstraction

POLICY_ORDER = (PolicyKind.MIN_MAX, PolicyKind.MAX_MIN, PolicyKind.NASH_RM)
POLICY_LABELS = {PolicyKind.MIN_MAX: "Min-max type", PolicyKind.MAX_MIN: "Max-min type", PolicyKind.NASH_RM: "Nash RM"}


@dataclass(frozen=True)
class BattleConfig:
    system: GameSystem
    policy_I: Policy
    policy_II: Policy
    num_episodes: int = 100
    duration: float = 10.0
    init_domain: tuple[float, float, float, float] | None = None
    master_seed: int = 0

    def __post_init__(self):
        if self.num_episodes < 1:
            raise ValueError("num_episodes must be >= 1")
        steps_in(self.duration, self.system.dt)
        if self.policy_I.role is not Role.PLAYER_I or self.policy_II.role is not Role.PLAYER_II:
            raise ValueError("policy_I must play role I and policy_II role II")

    @property
    def domain(self) -> tuple[float, float, float, float]:
        if self.init_domain is not None:
            return self.init_domain
        s = self.policy_I.table.spec
        return (s.alpha_lo, s.alpha_hi, s.beta_lo, s.beta_hi)


@dataclass
class BattleResult:
    mean: float
    payoffs: np.ndarray
    std: float
    seeds: list[tuple[int, int]]
    outside_fraction: float = 0.0

    @classmethod
    def from_payoffs(cls, payoffs, seeds, outside_fraction=0.0) -> "BattleResult":
        payoffs = np.asarray(payoffs, dtype=np.float64)
        std = float(np.std(payoffs, ddof=1)) if payoffs.size > 1 else 0.0
        return cls(float(np.mean(payoffs)), payoffs, std, list(seeds), outside_fraction)


def _episode_streams(master_seed: int, index: int):
    init, p1, p2 = np.random.SeedSequence([master_seed, index]).spawn(3)
    return np.random.default_rng(init), np.random.default_rng(p1), np.random.default_rng(p2)


def initial_state(cfg: BattleConfig, index: int) -> np.ndarray:
    alo, ahi, blo, bhi = cfg.domain
    rng = _episode_streams(cfg.master_seed, index)[0]
    return np.array([rng.uniform(alo, ahi), rng.uniform(blo, bhi)])


def _same_game(p: Policy, q: Policy) -> bool:
    return (
        p.kind is q.kind
        and p.table is q.table
        and p.abstraction is q.abstraction
        and p.system is q.system
        and p.rm_iterations == q.rm_iterations
        and p.rm_tolerance == q.rm_tolerance
    )


def _play(cfg: BattleConfig, indices: Sequence[int], x0=None):
    """Run the listed episodes; returns ``(payoffs, steps_outside, total_steps)``."""
    sys = cfg.system
    n_steps = steps_in(cfg.duration, sys.dt)
    streams = [_episode_streams(cfg.master_seed, i) for i in indices]
    if x0 is None:
        x = np.array([initial_state(cfg, i) for i in indices]).reshape(-1, 2)
    else:
        x = np.array(x0, dtype=np.float64).reshape(-1, 2)
    total = np.zeros(len(indices))
    outside = 0
    spec = cfg.policy_I.table.spec
    acts_a = cfg.policy_I.abstraction.actions_a
    acts_b = cfg.policy_II.abstraction.actions_b
    for _ in range(n_steps):
        outside += int(np.count_nonzero(~spec.contains(x)))
        sol_I: StageSolution = solve_stage(cfg.policy_I, x)
        sol_II = sol_I if _same_game(cfg.policy_I, cfg.policy_II) else solve_stage(cfg.policy_II, x)
        ia = np.array([sample_index(sol_I.dist_a[e], streams[e][1]) for e in range(len(indices))], dtype=np.intp)
        ib = np.array([sample_index(sol_II.dist_b[e], streams[e][2]) for e in range(len(indices))], dtype=np.intp)
        a = acts_a[ia]
        b = acts_b[ib]
        total += payoff_rate(sys, x, a, b) * sys.dt
        x = euler_step(sys, x, a, b)
    return total, outside, n_steps * len(indices)


def run_episode(cfg: BattleConfig, episode_index: int, x0=None) -> float:
    """Cumulative payoff to player I for one episode.

    ``x0`` overrides the drawn initial state.
    """
    return float(_play(cfg, [episode_index], None if x0 is None else [x0])[0][0])


def run_battle(cfg: BattleConfig, batch_size: int = 64) -> BattleResult:
    payoffs = np.empty(cfg.num_episodes)
    outside = 0
    steps = 0
    for start in range(0, cfg.num_episodes, batch_size):
        idx = list(range(start, min(start + batch_size, cfg.num_episodes)))
        p, o, s = _play(cfg, idx)
        payoffs[idx] = p
        outside += o
        steps += s
    seeds = [(cfg.master_seed, i) for i in range(cfg.num_episodes)]
    return BattleResult.from_payoffs(payoffs, seeds, outside / steps if steps else 0.0)


@dataclass
class TournamentResult:
    means: np.ndarray
    stds: np.ndarray
    episodes: int
    results: dict = field(default_factory=dict)
    order: tuple = POLICY_ORDER

    def entry(self, row: PolicyKind, col: PolicyKind) -> float:
        return float(self.means[self.order.index(PolicyKind(row)), self.order.index(PolicyKind(col))])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row_policy", "col_policy", "mean", "std", "episodes"])
            for r, rk in enumerate(self.order):
                for c, ck in enumerate(self.order):
                    w.writerow([rk.value, ck.value, repr(float(self.means[r, c])), repr(float(self.stds[r, c])), self.episodes])

    def format_table(self) -> str:
        width = 14
        head = " " * 16 + "".join(POLICY_LABELS[k].rjust(width) for k in self.order)
        lines = ["Player I (rows) vs Player II (columns)", head]
        for r, rk in enumerate(self.order):
            cells = "".join(f"{self.means[r, c]:{width}.4f}" for c in range(len(self.order)))
            lines.append(POLICY_LABELS[rk].ljust(16) + cells)
        return "\n".join(lines)


def tournament(
    system: GameSystem,
    tables: Mapping,
    abstraction: ActionAbstraction,
    num_episodes: int = 100,
    duration: float = 10.0,
    master_seed: int = 0,
    rm_iterations: int = DEFAULT_RM_ITERATIONS,
    rm_tolerance: float = DEFAULT_RM_TOLERANCE,
    init_domain=None,
) -> TournamentResult:
    """All 9 policy pairings; rows are player I's policy, columns player II's.

    ``tables`` maps :class:`ValueKind` (or its string value) to the table
    each policy kind keeps in memory. All cells share ``master_seed`` so the
    same initial states are used throughout.
    """
    by_kind = {ValueKind(k): t for k, t in tables.items()}
    policies = {}
    for kind in POLICY_ORDER:
        table = by_kind[kind.table_kind]
        for role in Role:
            policies[kind, role] = Policy(kind, table, role, abstraction, system, rm_iterations, rm_tolerance)
    n = len(POLICY_ORDER)
    means = np.empty((n, n))
    stds = np.empty((n, n))
    results = {}
    for r, rk in enumerate(POLICY_ORDER):
        for c, ck in enumerate(POLICY_ORDER):
            cfg = BattleConfig(
                system, policies[rk, Role.PLAYER_I], policies[ck, Role.PLAYER_II], num_episodes, duration, init_domain, master_seed
            )
            res = run_battle(cfg)
            results[rk, ck] = res
            means[r, c] = res.mean
            stds[r, c] = res.std
    return TournamentResult(means, stds, num_episodes, results)

"""Normal-form stage games between a maximizing row player and a minimizing
column player.

Matrices are plain ``float64`` numpy arrays of shape ``(Na, Nb)``; mixed
strategies are 1-D probability vectors. The regret-matching kernel is
compiled with numba and has a batched variant used by the grid sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

DEFAULT_RM_ITERATIONS = 2000
DEFAULT_RM_TOLERANCE = 1e-4
RM_CHECK_EVERY = 100


class InvalidMatrixError(ValueError):
    """A stage-game matrix contains a non-finite entry."""


@dataclass(frozen=True)
class ActionAbstraction:
    """Finite, strictly increasing action sets for both players."""

    actions_a: np.ndarray
    actions_b: np.ndarray

    def __post_init__(self):
        for name in ("actions_a", "actions_b"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError(f"{name} must be a non-empty 1-D array")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_a(self) -> int:
        return self.actions_a.size

    @property
    def n_b(self) -> int:
        return self.actions_b.size


def _even_points(interval: tuple[float, float], n: int) -> np.ndarray:
    lo, hi = float(interval[0]), float(interval[1])
    if n < 1:
        raise ValueError("abstraction size must be >= 1")
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if n == 1:
        return np.array([0.5 * (lo + hi)])
    pts = lo + (hi - lo) * np.arange(n) / (n - 1)
    pts[-1] = hi
    return pts


def uniform_abstraction(interval_a, interval_b, n_a: int, n_b: int) -> ActionAbstraction:
    """Evenly spaced actions including both endpoints (midpoint when n == 1)."""
    return ActionAbstraction(_even_points(interval_a, n_a), _even_points(interval_b, n_b))


def build_matrix(entry_fn: Callable[[int, int], float], abstraction: ActionAbstraction) -> np.ndarray:
    g = np.empty((abstraction.n_a, abstraction.n_b))
    for i in range(abstraction.n_a):
        for j in range(abstraction.n_b):
            g[i, j] = entry_fn(i, j)
    check_matrix(g)
    return g


def check_matrix(g: np.ndarray) -> np.ndarray:
    """Raise :class:`InvalidMatrixError` naming the first non-finite entry."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise InvalidMatrixError(f"expected a non-empty 2-D matrix, got shape {g.shape}")
    bad = np.argwhere(~np.isfinite(g))
    if bad.size:
        i, j = bad[0]
        raise InvalidMatrixError(f"non-finite entry {g[i, j]} at (i={i}, j={j})")
    return g


def pure_minimax(g: np.ndarray) -> tuple[float, int, int]:
    """Return ``(value, column, row)`` for min over columns of max over rows.

    Indices are 0-based; ties go to the lowest index.
    """
    g = np.asarray(g, dtype=np.float64)
    col_max = g.max(axis=0)
    j = int(np.argmin(col_max))
    i = int(np.argmax(g[:, j]))
    return float(col_max[j]), j, i


def pure_maximin(g: np.ndarray) -> tuple[float, int, int]:
    """Return ``(value, row, column)`` for max over rows of min over columns."""
    g = np.asarray(g, dtype=np.float64)
    row_min = g.min(axis=1)
    i = int(np.argmax(row_min))
    j = int(np.argmin(g[i, :]))
    return float(row_min[i]), i, j


def _check_dims(g, d1, d2):
    if g.shape != (d1.size, d2.size):
        raise ValueError(f"dimension mismatch: matrix {g.shape}, strategies ({d1.size}, {d2.size})")


def expected_value(g: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> float:
    g, d1, d2 = (np.asarray(v, dtype=np.float64) for v in (g, d1, d2))
    _check_dims(g, d1, d2)
    return float(d1 @ g @ d2)


def exploitability(g: np.ndarray, d1: np.ndarray, d2: np.ndarray) -> float:
    """Sum of both players' best-response gains against ``(d1, d2)``."""
    g, d1, d2 = (np.asarray(v, dtype=np.float64) for v in (g, d1, d2))
    _check_dims(g, d1, d2)
    v = d1 @ g @ d2
    return float(max((g @ d2).max() - v, 0.0) + max(v - (d1 @ g).min(), 0.0))


@dataclass(frozen=True)
class NashSolution:
    strategy_a: np.ndarray
    strategy_b: np.ndarray
    value: float
    exploitability: float
    iterations: int = 0


@numba.njit(cache=True)
def _rm_kernel(g, iterations, tol, check_every, avg_a, avg_b):
    """Deterministic simultaneous regret matching on one matrix.

    Writes the time-averaged strategies into ``avg_a``/``avg_b`` and returns
    ``(iterations_run, exploitability)``.
    """
    na, nb = g.shape
    reg_a = np.zeros(na)
    reg_b = np.zeros(nb)
    sum_a = np.zeros(na)
    sum_b = np.zeros(nb)
    s_a = np.empty(na)
    s_b = np.empty(nb)
    u_a = np.empty(na)
    u_b = np.empty(nb)
    expl = np.inf
    # Regrets within rounding noise of zero count as zero, so exact ties in
    # the payoffs are not broken differently by a constant shift.
    gmax = 0.0
    for i in range(na):
        for j in range(nb):
            gmax = max(gmax, abs(g[i, j]))
    noise = 64.0 * 2.220446049250313e-16 * gmax
    t = 0
    while t < iterations:
        floor = noise * (t + 1)
        pos = 0.0
        for i in range(na):
            if reg_a[i] > floor:
                pos += reg_a[i]
        for i in range(na):
            if pos > 0.0:
                s_a[i] = reg_a[i] / pos if reg_a[i] > floor else 0.0
            else:
                s_a[i] = 1.0 / na
        pos = 0.0
        for j in range(nb):
            if reg_b[j] > floor:
                pos += reg_b[j]
        for j in range(nb):
            if pos > 0.0:
                s_b[j] = reg_b[j] / pos if reg_b[j] > floor else 0.0
            else:
                s_b[j] = 1.0 / nb

        for i in range(na):
            acc = 0.0
            for j in range(nb):
                acc += g[i, j] * s_b[j]
            u_a[i] = acc
        for j in range(nb):
            u_b[j] = 0.0
        for i in range(na):
            w = s_a[i]
            if w != 0.0:
                for j in range(nb):
                    u_b[j] += w * g[i, j]
        v = 0.0
        for i in range(na):
            v += s_a[i] * u_a[i]
        # Row player maximizes, column player minimizes.
        for i in range(na):
            reg_a[i] += u_a[i] - v
            sum_a[i] += s_a[i]
        for j in range(nb):
            reg_b[j] += v - u_b[j]
            sum_b[j] += s_b[j]
        t += 1

        if t % check_every == 0 or t == iterations:
            expl = _exploit_avg(g, sum_a, sum_b, t, avg_a, avg_b)
            if expl < tol:
                break
    return t, expl


@numba.njit(cache=True)
def _exploit_avg(g, sum_a, sum_b, t, avg_a, avg_b):
    na, nb = g.shape
    for i in range(na):
        avg_a[i] = sum_a[i] / t
    for j in range(nb):
        avg_b[j] = sum_b[j] / t
    best_a = -np.inf
    v = 0.0
    for i in range(na):
        acc = 0.0
        for j in range(nb):
            acc += g[i, j] * avg_b[j]
        v += avg_a[i] * acc
        if acc > best_a:
            best_a = acc
    best_b = np.inf
    for j in range(nb):
        acc = 0.0
        for i in range(na):
            acc += avg_a[i] * g[i, j]
        if acc < best_b:
            best_b = acc
    return max(best_a - v, 0.0) + max(v - best_b, 0.0)


@numba.njit(cache=True, parallel=True)
def _rm_batch_kernel(gs, iterations, tol, check_every, avg_a, avg_b, values, expls):
    n = gs.shape[0]
    for k in numba.prange(n):
        _, e = _rm_kernel(gs[k], iterations, tol, check_every, avg_a[k], avg_b[k])
        g = gs[k]
        v = 0.0
        for i in range(g.shape[0]):
            for j in range(g.shape[1]):
                v += avg_a[k, i] * avg_b[k, j] * g[i, j]
        values[k] = v
        expls[k] = e


def regret_matching_solve(
    g: np.ndarray,
    iterations: int = DEFAULT_RM_ITERATIONS,
    rng_seed: int | None = None,
    tolerance: float = DEFAULT_RM_TOLERANCE,
) -> NashSolution:
    """Approximate a Nash equilibrium of ``g`` by self-play regret matching.

    Both players start uniform and update regrets against the opponent's
    current mixed strategy in expectation, so the result does not depend on
    any random state. ``rng_seed`` is reserved and ignored. The returned
    strategies are the time averages; the loop exits early once their
    exploitability drops below ``tolerance`` (checked every 100 iterations).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    g = check_matrix(g)
    g = np.ascontiguousarray(g)
    avg_a = np.empty(g.shape[0])
    avg_b = np.empty(g.shape[1])
    t, expl = _rm_kernel(g, int(iterations), float(tolerance), RM_CHECK_EVERY, avg_a, avg_b)
    return NashSolution(avg_a, avg_b, expected_value(g, avg_a, avg_b), float(expl), int(t))


def solve_batch(
    gs: np.ndarray,
    iterations: int = DEFAULT_RM_ITERATIONS,
    tolerance: float = DEFAULT_RM_TOLERANCE,
):
    """Regret matching over a stack of matrices ``(n, Na, Nb)``.

    Returns ``(strategies_a, strategies_b, values, exploitabilities)``; row
    ``k`` equals :func:`regret_matching_solve` applied to ``gs[k]``.
    """
    gs = np.ascontiguousarray(gs, dtype=np.float64)
    n, na, nb = gs.shape
    avg_a = np.empty((n, na))
    avg_b = np.empty((n, nb))
    values = np.empty(n)
    expls = np.empty(n)
    if n:
        _rm_batch_kernel(gs, int(iterations), float(tolerance), RM_CHECK_EVERY, avg_a, avg_b, values, expls)
    return avg_a, avg_b, values, expls


def oracle_2x2(g: np.ndarray) -> NashSolution:
    """Closed-form solution of a 2x2 zero-sum game (test oracle)."""
    g = check_matrix(g)
    if g.shape != (2, 2):
        raise ValueError("oracle_2x2 needs a 2x2 matrix")
    for i in range(2):
        for j in range(2):
            # Saddle: largest in its column, smallest in its row.
            if g[i, j] >= g[:, j].max() and g[i, j] <= g[i, :].min():
                d1 = np.zeros(2)
                d2 = np.zeros(2)
                d1[i] = d2[j] = 1.0
                return NashSolution(d1, d2, float(g[i, j]), 0.0)
    (g11, g12), (g21, g22) = g
    den = g11 - g12 - g21 + g22
    p = (g22 - g21) / den
    q = (g22 - g12) / den
    d1 = np.array([p, 1.0 - p])
    d2 = np.array([q, 1.0 - q])
    value = (g11 * g22 - g12 * g21) / den
    return NashSolution(d1, d2, float(value), exploitability(g, d1, d2))

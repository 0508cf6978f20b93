"""Two-player planar differential games, their forward-Euler discretization
and trajectory simulation.

State arrays carry the two coordinates ``(alpha, beta)`` on the last axis.
The callables ``f`` and ``l`` of a :class:`GameSystem` must broadcast over
numpy arrays: ``f(x, a, b)`` returns an array shaped like ``x`` and
``l(x, a, b)`` an array of the broadcast shape of ``x[..., 0]``, ``a`` and ``b``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Dynamics = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class InvalidStateError(ValueError):
    """A state has a non-finite component."""


@dataclass(frozen=True)
class GameSystem:
    f: Dynamics
    l: Dynamics
    a_interval: tuple[float, float]
    b_interval: tuple[float, float]
    dt: float
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for lo, hi in (self.a_interval, self.b_interval):
            if lo > hi:
                raise ValueError(f"empty action interval [{lo}, {hi}]")


class PayoffKind(enum.Enum):
    EXAMPLE1 = 1
    EXAMPLE2 = 2


def benchmark_f(x, a, b):
    alpha, beta = x[..., 0], x[..., 1]
    return np.stack(np.broadcast_arrays(-((alpha + beta + a) ** 3), -((beta - alpha + b) ** 3)), axis=-1)


def payoff_example1(x, a, b):
    alpha, beta = x[..., 0], x[..., 1]
    return 1.0 + alpha**2 - beta**2 - a**2 + b**2


def payoff_example2(x, a, b):
    alpha, beta = x[..., 0], x[..., 1]
    return 1.0 + 10.0 * np.sin(4.0 * a * b) + alpha**2 - beta**2


def benchmark_system(kind: PayoffKind | int = PayoffKind.EXAMPLE1, dt: float = 0.02) -> GameSystem:
    """The cubic benchmark plant with actions in [-1, 1] and one of the two payoffs."""
    kind = PayoffKind(kind)
    payoff = payoff_example1 if kind is PayoffKind.EXAMPLE1 else payoff_example2
    return GameSystem(benchmark_f, payoff, (-1.0, 1.0), (-1.0, 1.0), dt, name=f"example{kind.value}")


def _as_state(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (2,):
        raise InvalidStateError(f"state must have 2 components on the last axis, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidStateError(f"non-finite state {x}")
    return x


def euler_step(sys: GameSystem, x, a, b) -> np.ndarray:
    """``x + f(x, a, b) * dt``; broadcasts over leading axes, no clamping."""
    x = _as_state(x)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return x + sys.f(x, a, b) * sys.dt


def payoff_rate(sys: GameSystem, x, a, b):
    x = _as_state(x)
    return sys.l(x, np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    actions_a: np.ndarray
    actions_b: np.ndarray
    cumulative_payoff: float

    def __len__(self):
        return len(self.times)


def steps_in(duration: float, dt: float) -> int:
    """Number of whole steps of size ``dt`` in ``duration``."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    n = round(duration / dt)
    if abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"duration {duration} is not a multiple of dt={dt}")
    return int(n)


def simulate(sys: GameSystem, x0, policy_a, policy_b, duration: float, rng_seed=None) -> Trajectory:
    """Roll the discretized game forward under two feedback policies.

    Policies are called as ``policy(x, rng)`` with the pre-step state and a
    shared ``numpy.random.Generator`` and return a scalar action; both are
    evaluated on the same state before the step is applied. ``states`` holds
    the state at ``k * dt`` for ``k = 0..n`` and the payoff accumulates
    ``l(x_k, a_k, b_k) * dt``.
    """
    n = steps_in(duration, sys.dt)
    rng = np.random.default_rng(rng_seed)
    x = _as_state(x0).copy()
    states = np.empty((n + 1, 2))
    acts_a = np.empty(n)
    acts_b = np.empty(n)
    states[0] = x
    total = 0.0
    for k in range(n):
        a = float(policy_a(x, rng))
        b = float(policy_b(x, rng))
        total += float(payoff_rate(sys, x, a, b)) * sys.dt
        x = euler_step(sys, x, a, b)
        if not np.all(np.isfinite(x)):
            raise InvalidStateError(f"state became non-finite at step {k + 1}: {x}")
        states[k + 1] = x
        acts_a[k] = a
        acts_b[k] = b
    return Trajectory(np.arange(n + 1) * sys.dt, states, acts_a, acts_b, total)

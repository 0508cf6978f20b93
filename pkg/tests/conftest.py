"""Desk-scale tables shared by the acceptance tests.

One run of 50 sweeps per example and value kind; every intermediate table
is kept, so step 49 doubles as the rolling-control table.
"""

import warnings

import pytest

from rollnash.dynamics import benchmark_system
from rollnash.grid import GridSpec, ValueKind
from rollnash.matrix_game import uniform_abstraction
from rollnash.value_iteration import SweepConfig, run

DESK_GRID = GridSpec(n_alpha=65, n_beta=65)
DESK_ACTIONS = 21
DESK_M = 50


def desk_abstraction():
    return uniform_abstraction((-1, 1), (-1, 1), DESK_ACTIONS, DESK_ACTIONS)


def desk_config(example, kind, m=DESK_M):
    return SweepConfig(benchmark_system(example), DESK_GRID, desk_abstraction(), m, kind)


class DeskRun:
    def __init__(self, example):
        self.example = example
        self.steps = {}
        self.diag = {}
        for kind in ValueKind:
            tables = []
            _, diag = run(desk_config(example, kind), on_step=lambda k, t: tables.append(t))
            self.steps[kind] = tables
            self.diag[kind] = diag

    def table(self, kind, m=DESK_M):
        return self.steps[ValueKind(kind)][m - 1]

    def control_tables(self):
        return {k: self.table(k, DESK_M - 1) for k in ValueKind}


_cache = {}


@pytest.fixture(scope="session")
def desk():
    def get(example):
        if example not in _cache:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                _cache[example] = DeskRun(example)
        return _cache[example]

    return get

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from rollnash.matrix_game import (
    InvalidMatrixError,
    build_matrix,
    expected_value,
    exploitability,
    oracle_2x2,
    pure_maximin,
    pure_minimax,
    regret_matching_solve,
    solve_batch,
    uniform_abstraction,
)

PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])
SADDLE = np.array([[3.0, 1.0], [4.0, 2.0]])

small_matrices = arrays(
    np.float64,
    st.tuples(st.integers(1, 5), st.integers(1, 5)),
    elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)


def lp_value(g):
    """Game value by linear programming, used only as an outside reference."""
    na, nb = g.shape
    # maximize v s.t. sum_i p_i g[i, j] >= v for all j, p in simplex
    c = np.zeros(na + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-g.T, np.ones((nb, 1))])
    a_eq = np.hstack([np.ones((1, na)), np.zeros((1, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(nb), A_eq=a_eq, b_eq=[1.0], bounds=[(0, None)] * na + [(None, None)])
    return -res.fun


class TestAbstraction:
    def test_41_point_abstraction(self):
        ab = uniform_abstraction((-1, 1), (-1, 1), 41, 41)
        np.testing.assert_allclose(ab.actions_a, [-1 + 0.05 * i for i in range(41)], atol=1e-15)
        assert ab.actions_a[0] == -1.0 and ab.actions_a[-1] == 1.0 and ab.actions_a[20] == 0.0

    def test_endpoints(self):
        ab = uniform_abstraction((-1, 1), (-1, 1), 2, 2)
        assert list(ab.actions_b) == [-1.0, 1.0]

    def test_degenerate(self):
        ab = uniform_abstraction((0, 0), (0, 0), 1, 1)
        assert list(ab.actions_a) == [0.0]

    def test_midpoint_for_single_action(self):
        assert list(uniform_abstraction((0, 1), (-1, 1), 1, 1).actions_a) == [0.5]


class TestBuildMatrix:
    def test_constant(self):
        ab = uniform_abstraction((-1, 1), (-1, 1), 3, 4)
        g = build_matrix(lambda i, j: 2.5, ab)
        assert g.shape == (3, 4) and np.all(g == 2.5)

    def test_one_by_one(self):
        assert build_matrix(lambda i, j: 7.0, uniform_abstraction((0, 0), (0, 0), 1, 1)).shape == (1, 1)

    def test_example1_origin_stage(self):
        ab = uniform_abstraction((-1, 1), (-1, 1), 41, 41)
        g = build_matrix(lambda i, j: (1 - ab.actions_a[i] ** 2 + ab.actions_b[j] ** 2) * 0.02, ab)
        assert g[20, 20] == pytest.approx(0.02)
        assert g[0, 0] == pytest.approx(0.02)
        assert g[0, 20] == pytest.approx(0.0)

    def test_non_finite_entry_named(self):
        ab = uniform_abstraction((-1, 1), (-1, 1), 2, 3)
        with pytest.raises(InvalidMatrixError, match=r"i=1, j=2"):
            build_matrix(lambda i, j: np.nan if (i, j) == (1, 2) else 0.0, ab)


class TestPure:
    def test_minimax_saddle(self):
        # 0-based: column 1, row 1.
        assert pure_minimax(SADDLE) == (2.0, 1, 1)

    def test_maximin_saddle(self):
        assert pure_maximin(SADDLE) == (2.0, 1, 1)

    def test_pennies(self):
        assert pure_minimax(PENNIES)[0] == 1.0
        assert pure_maximin(PENNIES)[0] == -1.0

    def test_scalar(self):
        assert pure_minimax([[4.5]])[0] == 4.5 == pure_maximin([[4.5]])[0]

    def test_ties_lowest_index(self):
        v, j, i = pure_minimax(np.ones((3, 3)))
        assert (j, i) == (0, 0)

    @given(small_matrices)
    def test_maximin_below_minimax(self, g):
        assert pure_maximin(g)[0] <= pure_minimax(g)[0]


class TestValueAndExploitability:
    def test_point_masses(self):
        d1 = np.array([0.0, 1.0])
        d2 = np.array([1.0, 0.0])
        assert expected_value(SADDLE, d1, d2) == 4.0

    def test_uniform(self):
        u = np.array([0.5, 0.5])
        assert expected_value(PENNIES, u, u) == 0.0
        assert expected_value(SADDLE, u, u) == 2.5

    def test_exploitability_examples(self):
        e0 = np.array([1.0, 0.0])
        e1 = np.array([0.0, 1.0])
        assert exploitability(SADDLE, e1, e1) == 0.0
        assert exploitability(PENNIES, np.full(2, 0.5), np.full(2, 0.5)) == 0.0
        assert exploitability(SADDLE, e0, e0) == pytest.approx(3.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            expected_value(SADDLE, np.ones(3) / 3, np.ones(2) / 2)
        with pytest.raises(ValueError):
            exploitability(SADDLE, np.ones(2) / 2, np.ones(3) / 3)


class TestOracle2x2:
    def test_pennies(self):
        sol = oracle_2x2(PENNIES)
        np.testing.assert_allclose(sol.strategy_a, [0.5, 0.5])
        assert sol.value == 0.0

    def test_saddle(self):
        sol = oracle_2x2(SADDLE)
        assert list(sol.strategy_a) == [0.0, 1.0] and list(sol.strategy_b) == [0.0, 1.0]
        assert sol.value == 2.0

    def test_mixed_hand_values(self):
        g = np.array([[0.0, 2.0], [3.0, 1.0]])
        sol = oracle_2x2(g)
        np.testing.assert_allclose(sol.strategy_a, [0.5, 0.5])
        np.testing.assert_allclose(sol.strategy_b, [0.25, 0.75])
        assert sol.value == pytest.approx(1.5)
        assert exploitability(g, sol.strategy_a, sol.strategy_b) == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=200)
    @given(arrays(np.float64, (2, 2), elements=st.floats(-5, 5, allow_nan=False)))
    def test_matches_lp(self, g):
        sol = oracle_2x2(g)
        assert sol.value == pytest.approx(lp_value(g), abs=1e-6)


class TestRegretMatching:
    def test_pennies(self):
        sol = regret_matching_solve(PENNIES, 10000, rng_seed=0)
        np.testing.assert_allclose(sol.strategy_a, [0.5, 0.5], atol=0.02)
        np.testing.assert_allclose(sol.strategy_b, [0.5, 0.5], atol=0.02)
        assert abs(sol.value) <= 0.02

    def test_saddle(self):
        sol = regret_matching_solve(SADDLE)
        assert sol.value == pytest.approx(2.0, abs=0.02)
        assert sol.strategy_a[1] >= 0.95 and sol.strategy_b[1] >= 0.95

    def test_random_2x2_against_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            g = rng.uniform(-1, 1, (2, 2))
            assert regret_matching_solve(g, 20000).value == pytest.approx(oracle_2x2(g).value, abs=0.02)

    def test_value_is_bilinear_form(self):
        g = np.random.default_rng(3).normal(size=(4, 6))
        sol = regret_matching_solve(g)
        assert sol.value == pytest.approx(expected_value(g, sol.strategy_a, sol.strategy_b), abs=1e-9)
        assert sol.strategy_a.sum() == pytest.approx(1.0, abs=1e-9)
        assert sol.strategy_b.sum() == pytest.approx(1.0, abs=1e-9)
        assert sol.exploitability == pytest.approx(exploitability(g, sol.strategy_a, sol.strategy_b), abs=1e-9)

    def test_seed_is_ignored(self):
        g = np.random.default_rng(4).normal(size=(5, 5))
        a = regret_matching_solve(g, rng_seed=1)
        b = regret_matching_solve(g, rng_seed=99)
        assert a.strategy_a.tobytes() == b.strategy_a.tobytes()

    def test_one_iteration_is_uniform(self):
        sol = regret_matching_solve(SADDLE, iterations=1)
        np.testing.assert_allclose(sol.strategy_a, [0.5, 0.5])

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError):
            regret_matching_solve(SADDLE, iterations=0)

    def test_non_finite_matrix(self):
        with pytest.raises(InvalidMatrixError):
            regret_matching_solve(np.array([[1.0, np.inf]]))

    def test_early_exit(self):
        sol = regret_matching_solve(np.array([[1.0]]), iterations=5000)
        assert sol.iterations == 100 and sol.exploitability == 0.0

    @settings(max_examples=60, deadline=None)
    @given(small_matrices)
    def test_value_between_pure_bounds(self, g):
        sol = regret_matching_solve(g)
        assert pure_maximin(g)[0] - sol.exploitability - 1e-12 <= sol.value
        assert sol.value <= pure_minimax(g)[0] + sol.exploitability + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(small_matrices)
    def test_value_near_lp_value(self, g):
        sol = regret_matching_solve(g)
        assert abs(sol.value - lp_value(g)) <= sol.exploitability + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(small_matrices, st.floats(-50, 50))
    def test_constant_shift(self, g, c):
        # the shift must not round away payoff differences
        d = np.abs(g.ravel()[:, None] - g.ravel()[None, :])
        assume(np.array_equal((g + c) - c, g))
        assume(np.all((d == 0) | (d >= 1e-9 * (np.abs(g).max() + abs(c)))))
        a = regret_matching_solve(g, tolerance=0.0)
        b = regret_matching_solve(g + c, tolerance=0.0)
        # exact in real arithmetic; 2000 rounded updates leave ~1e-9 drift
        assert b.value == pytest.approx(a.value + c, abs=1e-6)
        np.testing.assert_allclose(a.strategy_a, b.strategy_a, atol=1e-6)
        np.testing.assert_allclose(a.strategy_b, b.strategy_b, atol=1e-6)

    def test_exploitability_shrinks_with_budget(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            g = rng.uniform(-5, 5, (rng.integers(2, 7), rng.integers(2, 7)))
            assert regret_matching_solve(g, 10000).exploitability <= regret_matching_solve(g, 100).exploitability + 1e-6

    def test_saddle_exploitability_vanishes(self):
        g = SADDLE + 10.0
        e = [regret_matching_solve(g, n, tolerance=0.0).exploitability for n in (100, 1000, 10000)]
        assert e[0] >= e[1] >= e[2] and e[2] < 1e-3

    def test_batch_matches_single(self):
        gs = np.random.default_rng(5).normal(size=(7, 4, 3))
        da, db, vals, expl = solve_batch(gs, 500)
        for k in range(7):
            sol = regret_matching_solve(gs[k], 500)
            assert da[k].tobytes() == sol.strategy_a.tobytes()
            assert db[k].tobytes() == sol.strategy_b.tobytes()
            assert vals[k] == pytest.approx(sol.value, abs=1e-12)
            assert expl[k] == pytest.approx(sol.exploitability, abs=1e-12)

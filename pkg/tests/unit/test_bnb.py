"""Unit tests for the association branch and bound."""
import itertools

import numpy as np
import pytest

from src.errors import InfeasibleError
from src.optimization.bnb import (
    BNB_TRACE_COLUMNS,
    association_objective,
    bnb_solve,
    branch_index,
    enumerate_assignments,
    round_solution,
    solve_p15_relaxation,
)

OMEGA = np.array([[0.7, 0.2], [0.3, 0.8]])
ROUNDED = np.array([[1, 0], [0, 1]])

SHAPES = [
    (n, k, a)
    for n, k, a in itertools.product((1, 2, 3), repeat=3)
    if k <= n * a
]


class TestRelaxation:
    """Test the linear relaxation."""

    def test_single_irs(self):
        """Test that N = 1 forces every user onto the IRS."""
        omega, upper = solve_p15_relaxation({}, np.array([[2.0, 3.0]]), np.array([1.0]), 2)

        np.testing.assert_allclose(omega, [[1.0, 1.0]], atol=1e-9)
        assert upper == pytest.approx(4.0)

    def test_dominant_irs(self):
        """Test that zero cost puts all mass on the best IRS."""
        utility = np.array([[5.0, 6.0], [1.0, 2.0]])
        omega, upper = solve_p15_relaxation({}, utility, np.zeros(2), 2)

        np.testing.assert_allclose(omega, [[1.0, 1.0], [0.0, 0.0]], atol=1e-9)
        assert upper == pytest.approx(11.0)

    def test_fixed_entry_respected(self):
        """Test that fixed entries hold in the relaxed solution."""
        utility = np.array([[5.0, 6.0], [1.0, 2.0]])
        omega, _ = solve_p15_relaxation({(1, 0): 1}, utility, np.zeros(2), 2)

        assert omega[1, 0] == pytest.approx(1.0)
        assert omega[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_infeasible_fixing(self):
        """Test that contradictory fixings give -inf."""
        omega, upper = solve_p15_relaxation({(0, 0): 0}, np.ones((1, 2)), np.zeros(1), 2)

        assert omega is None
        assert upper == float("-inf")


class TestRounding:
    """Test rounding and repair."""

    def test_argmax_rounding(self):
        """Test per-user argmax."""
        matrix, feasible = round_solution(OMEGA, np.ones((2, 2)), np.zeros(2), 2)

        assert feasible
        np.testing.assert_array_equal(matrix, ROUNDED)

    def test_tie_goes_to_first_irs(self):
        """Test the tie rule."""
        matrix, _ = round_solution(np.array([[0.5], [0.5]]), np.ones((2, 1)), np.zeros(2), 1)

        np.testing.assert_array_equal(matrix, [[1], [0]])

    def test_capacity_repair(self):
        """Test that overloaded IRSs are repaired."""
        omega = np.array([[0.6, 0.5, 0.7], [0.2, 0.3, 0.2], [0.2, 0.2, 0.1]])
        utility = np.array([[3.0, 3.0, 3.0], [2.0, 1.0, 2.5], [1.0, 2.0, 0.5]])
        matrix, feasible = round_solution(omega, utility, np.zeros(3), 1)

        assert feasible
        assert matrix.sum(axis=1).max() <= 1
        np.testing.assert_array_equal(matrix.sum(axis=0), [1, 1, 1])

    def test_repair_failure(self):
        """Test that repair can fail under fixings."""
        omega = np.array([[1.0, 1.0], [0.0, 0.0]])
        fixed = {(0, 0): 1, (0, 1): 1}
        _, feasible = round_solution(omega, np.ones((2, 2)), np.zeros(2), 1, fixed)

        assert not feasible


class TestBranchIndex:
    """Test the branching rule."""

    def test_largest_gap_with_tie(self):
        """Test the lexicographic tie rule."""
        assert branch_index(OMEGA, ROUNDED) == (0, 0)

    def test_integral_solution(self):
        """Test that all-zero gaps give the first entry."""
        assert branch_index(ROUNDED.astype(float), ROUNDED) == (0, 0)

    def test_fixed_entry_skipped(self):
        """Test that fixed entries are excluded."""
        assert branch_index(OMEGA, ROUNDED, {(0, 0): 1}) == (1, 0)

    def test_all_fixed(self):
        """Test the leaf signal."""
        fixed = {(n, k): 0 for n in range(2) for k in range(2)}

        assert branch_index(OMEGA, ROUNDED, fixed) is None


class TestBnBSolve:
    """Test branch and bound against exhaustive enumeration."""

    @pytest.mark.parametrize("num_irs,num_users,capacity", SHAPES)
    def test_matches_enumeration(self, num_irs, num_users, capacity):
        """Test exactness on random instances."""
        rng = np.random.default_rng(100 * num_irs + 10 * num_users + capacity)
        for _ in range(20):
            utility = rng.uniform(0.0, 10.0, (num_irs, num_users))
            irs_cost = rng.uniform(0.0, 8.0, num_irs)

            result = bnb_solve(utility, irs_cost, capacity)
            _, expected = enumerate_assignments(utility, irs_cost, capacity)

            assert result.objective == pytest.approx(expected, abs=1e-6 * max(1.0, abs(expected)))
            assert result.upper - result.objective <= result.eps + 1e-12
            assert result.assoc.capacity_violation(capacity) == 0
            assert result.nodes <= 2 ** (num_irs * num_users + 1)

    def test_single_irs_needs_no_branching(self):
        """Test the trivial association."""
        result = bnb_solve(np.array([[1.0, 2.0, 3.0]]), np.array([0.5]), 3)

        assert result.nodes == 1
        np.testing.assert_array_equal(result.assoc.matrix, [[1, 1, 1]])

    def test_large_cost_concentrates_users(self):
        """Test that an expensive IRS budget minimizes active IRSs."""
        utility = np.ones((2, 2)) + np.array([[0.0, 0.01], [0.01, 0.0]])
        result = bnb_solve(utility, np.full(2, 100.0), 2)

        assert result.assoc.num_active() == 1

    def test_trace_bounds(self):
        """Test the audit trail and bound sanity."""
        rng = np.random.default_rng(7)
        result = bnb_solve(rng.uniform(0, 5, (3, 3)), rng.uniform(0, 3, 3), 1)
        trace = result.trace

        assert list(trace.columns) == BNB_TRACE_COLUMNS
        finite = trace[np.isfinite(trace["upper"]) & np.isfinite(trace["lower"])]
        assert (finite["upper"] >= finite["lower"] - 1e-9).all()

    def test_forbidden_pairs(self):
        """Test that forbidden pairs are never chosen."""
        utility = np.array([[9.0, 9.0], [1.0, 1.0]])
        forbidden = np.array([[True, False], [False, False]])
        result = bnb_solve(utility, np.zeros(2), 2, forbidden=forbidden)

        assert result.assoc.matrix[0, 0] == 0
        assert result.objective == pytest.approx(10.0)

    def test_too_many_users(self):
        """Test that K > N*a is infeasible."""
        with pytest.raises(InfeasibleError):
            bnb_solve(np.ones((1, 3)), np.zeros(1), 2)

    def test_objective_helper(self):
        """Test chi for a given assignment."""
        matrix = np.array([[1, 1], [0, 0]])

        assert association_objective(matrix, np.full((2, 2), 2.0), np.array([1.0, 5.0])) == 3.0

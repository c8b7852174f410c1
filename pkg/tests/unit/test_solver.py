"""Unit tests for the conic program builder, barrier method and extraction."""
import logging
import warnings

import numpy as np
import pytest

from src.errors import DomainError, GuardrailError
from src.solver.barrier import REGULARIZATION, solve, solve_reduced_system
from src.solver.embedding import (
    check_hermitian,
    embed_coefficient,
    embed_complex,
    recover_complex,
)
from src.solver.extraction import (
    gaussian_candidates,
    principal_component,
    purify_toward,
    rank_one_extract,
    reduce_rank,
)
from src.solver.program import AffineForm, ConeProgram, SolveStatus


def random_hermitian(rng, dim, psd=False):
    raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    if psd:
        return raw @ raw.conj().T
    return 0.5 * (raw + raw.conj().T)


class TestEmbedding:
    """Test the real symmetric embedding."""

    def test_trace_preserved(self):
        """Test Tr(A X) under the embedding."""
        rng = np.random.default_rng(0)
        A = random_hermitian(rng, 3)
        X = random_hermitian(rng, 3, psd=True)

        embedded = np.trace(embed_coefficient(A, "complex") @ embed_complex(X))
        assert embedded == pytest.approx(np.real(np.trace(A @ X)))

    def test_recover(self):
        """Test recovering the Hermitian matrix."""
        X = random_hermitian(np.random.default_rng(1), 3)

        np.testing.assert_allclose(recover_complex(embed_complex(X)), X, atol=1e-14)

    def test_embedding_keeps_psd(self):
        """Test that eigenvalues are duplicated."""
        X = random_hermitian(np.random.default_rng(2), 2, psd=True)
        eigenvalues = np.linalg.eigvalsh(embed_complex(X))

        np.testing.assert_allclose(
            eigenvalues, np.repeat(np.linalg.eigvalsh(X), 2), rtol=1e-10
        )

    def test_non_hermitian_rejected(self):
        """Test that non-Hermitian data is rejected."""
        with pytest.raises(DomainError):
            check_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestConeProgram:
    """Test program construction."""

    def test_duplicate_block(self):
        """Test unique block names."""
        program = ConeProgram()
        program.add_block("X", 2)
        with pytest.raises(DomainError):
            program.add_block("X", 2)

    def test_guardrail(self):
        """Test the dimension limit."""
        with pytest.raises(GuardrailError):
            ConeProgram().add_block("X", 201)

    def test_coefficient_shape(self):
        """Test coefficient validation."""
        program = ConeProgram()
        program.add_block("X", 2)
        with pytest.raises(DomainError):
            program.form({"X": np.eye(3)})

    def test_negative_log_weight(self):
        """Test that log weights must be nonnegative."""
        program = ConeProgram()
        program.add_block("x", 1, kind="real")
        with pytest.raises(DomainError):
            program.add_log_term(-1.0, program.form({"x": np.eye(1)}))

    def test_evaluation_helpers(self):
        """Test objective and violation evaluation."""
        program = ConeProgram()
        program.add_block("X", 2)
        program.maximize(program.form({"X": np.diag([1.0, 2.0])}))
        program.add_inequality("power", program.trace_form(["X"], -1.0, 1.0))
        program.pin_diagonal("X", 0.5)
        values = {"X": np.eye(2)}

        assert program.evaluate_objective(values) == pytest.approx(3.0)
        assert program.constraint_violation(values) == pytest.approx(1.0)
        assert program.real_dimension == 4
        assert "power" in program.to_text()

    def test_inequality_slack(self):
        """Test the smallest constraint value, ignoring equalities."""
        program = ConeProgram()
        program.add_block("X", 2)
        program.add_inequality("power", program.trace_form(["X"], -1.0, 3.0))
        rate = program.trace_form(["X"])
        program.add_log_constraint("rate", AffineForm(offset=-0.5), 1.0, rate)
        program.pin_diagonal("X", 0.5)

        assert program.inequality_slack({"X": np.eye(2)}) == pytest.approx(np.log(2.0) - 0.5)
        assert program.inequality_slack({"X": 2.0 * np.eye(2)}) == pytest.approx(-1.0)
        assert ConeProgram().inequality_slack({}) == float("inf")


class TestBarrierSolve:
    """Test the barrier method on programs with known optima."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_largest_eigenvalue(self, seed):
        """Test max Tr(QX) s.t. Tr(X) <= P."""
        rng = np.random.default_rng(seed)
        Q = random_hermitian(rng, 3, psd=True)
        program = ConeProgram()
        program.add_block("X", 3)
        program.maximize(program.form({"X": Q}))
        program.add_inequality("power", program.trace_form(["X"], -1.0, 2.0))

        solution = solve(program)

        expected = 2.0 * np.linalg.eigvalsh(Q)[-1]
        assert solution.status == SolveStatus.OPTIMAL
        assert solution.objective == pytest.approx(expected, rel=1e-5)
        assert solution.dual_bound >= solution.objective
        assert np.real(np.trace(solution.values["X"])) == pytest.approx(2.0, rel=1e-4)

    def test_unit_diagonal(self):
        """Test an equality-constrained program."""
        coupling = 0.6 - 0.8j
        program = ConeProgram()
        program.add_block("V", 2)
        program.maximize(program.form({"V": np.array([[0.0, coupling], [np.conj(coupling), 0.0]])}))
        program.pin_diagonal("V")

        solution = solve(program)

        assert solution.optimal
        assert solution.objective == pytest.approx(2.0, rel=1e-5)
        np.testing.assert_allclose(np.diag(solution.values["V"]).real, [1.0, 1.0], atol=1e-7)

    def test_log_term(self):
        """Test max ln(x) - x."""
        program = ConeProgram()
        program.add_block("x", 1, kind="real")
        program.maximize(program.form({"x": -np.eye(1)}))
        program.add_log_term(1.0, program.form({"x": np.eye(1)}))

        solution = solve(program)

        assert solution.optimal
        assert solution.objective == pytest.approx(-1.0, abs=1e-5)
        assert solution.values["x"][0, 0] == pytest.approx(1.0, abs=1e-2)

    def test_phase_one_from_infeasible_hint(self):
        """Test that a poor hint still reaches the optimum."""
        program = ConeProgram()
        program.add_block("X", 2)
        program.maximize(program.form({"X": np.diag([1.0, 3.0])}))
        program.add_inequality("power", program.trace_form(["X"], -1.0, 1.0))
        program.set_initial_point({"X": 5.0 * np.eye(2)})

        solution = solve(program)

        assert solution.optimal
        assert solution.objective == pytest.approx(3.0, rel=1e-5)

    def test_infeasible_program(self):
        """Test that an empty feasible set is reported, not raised."""
        program = ConeProgram()
        program.add_block("X", 2)
        program.maximize(program.form({"X": np.eye(2)}))
        program.add_inequality("negative_trace", program.trace_form(["X"], -1.0, -1.0))

        solution = solve(program)

        assert not solution.optimal
        assert solution.objective == float("-inf")

    def test_boundary_only_program_is_not_infeasible(self):
        """Test that a feasible set without interior is not reported as empty."""
        program = ConeProgram()
        program.add_block("X", 2)
        program.maximize(program.form({"X": np.eye(2)}))
        program.add_inequality("zero_trace", program.trace_form(["X"], -1.0, 0.0))

        solution = solve(program)

        assert not solution.optimal
        assert solution.status != SolveStatus.INFEASIBLE


class TestNewtonSystem:
    """Test the reduced Newton solve."""

    def test_well_conditioned_matches_direct_solve(self):
        """Test that regular systems are solved unchanged."""
        system = np.array([[4.0, 1.0], [1.0, 3.0]])
        rhs = np.array([1.0, 2.0])

        np.testing.assert_allclose(system @ solve_reduced_system(system, rhs), rhs)

    def test_ill_conditioned_system_is_regularized_quietly(self, caplog):
        """Test that no LinAlgWarning escapes and the shift is logged."""
        system = np.diag([1.0, 1e-17])
        rhs = np.array([2.0, 1.0])

        with caplog.at_level(logging.DEBUG, logger="src.solver.barrier"):
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                solution = solve_reduced_system(system, rhs)

        assert np.all(np.isfinite(solution))
        assert solution[0] == pytest.approx(2.0)
        assert solution[1] == pytest.approx(1.0 / (1e-17 + REGULARIZATION), rel=1e-6)
        assert "Regularizing Newton system" in caplog.text

    def test_singular_system_falls_back_to_least_squares(self):
        """Test the minimum-norm answer for an exactly singular system."""
        system = np.array([[1.0, 1.0], [1.0, 1.0]])
        solution = solve_reduced_system(system, np.array([2.0, 2.0]))

        np.testing.assert_allclose(solution, [1.0, 1.0], atol=1e-10)


class TestExtraction:
    """Test rank-one extraction."""

    def test_principal_component_of_rank_one(self):
        """Test recovery of v from v v^H."""
        v = np.array([1.0 + 1.0j, 2.0, -0.5j])
        vector, ratio = principal_component(np.outer(v, v.conj()))

        assert ratio == pytest.approx(1.0)
        np.testing.assert_allclose(np.outer(vector, vector.conj()), np.outer(v, v.conj()), atol=1e-12)
        assert vector[-1].imag == pytest.approx(0.0, abs=1e-12)
        assert vector[-1].real >= 0

    def test_zero_matrix(self):
        """Test that a zero matrix gives the zero vector."""
        result = rank_one_extract(np.zeros((2, 2)))

        np.testing.assert_array_equal(result.vector, np.zeros(2))
        assert result.ratio == 1.0
        assert not result.randomized

    def test_rank_one_skips_randomization(self):
        """Test the threshold path."""
        v = np.array([1.0, 1j])
        result = rank_one_extract(np.outer(v, v.conj()))

        assert not result.randomized
        assert result.ratio == pytest.approx(1.0)

    def test_full_rank_uses_score(self):
        """Test randomization on a full-rank matrix."""
        W = np.diag([1.0, 1.0])
        result = rank_one_extract(W, rng=np.random.default_rng(0), num_candidates=50)

        assert result.ratio == pytest.approx(0.5)
        assert np.sum(np.abs(result.vector) ** 2) == pytest.approx(2.0)

    def test_gaussian_candidates_shape(self):
        """Test draws from CN(0, W)."""
        draws = gaussian_candidates(np.diag([4.0, 0.0]), np.random.default_rng(0), 1000)

        assert draws.shape == (1000, 2)
        np.testing.assert_allclose(draws[:, 1], 0.0, atol=1e-12)
        assert np.mean(np.abs(draws[:, 0]) ** 2) == pytest.approx(4.0, rel=0.15)


class TestRankReduction:
    """Test exact rank reduction of relaxed blocks."""

    def test_purify_toward_channel(self):
        """Test that c^H W c is kept and W only loses PSD mass."""
        rng = np.random.default_rng(3)
        W = random_hermitian(rng, 3, psd=True)
        c = rng.standard_normal(3) + 1j * rng.standard_normal(3)

        purified = purify_toward(W, c)

        _, ratio = principal_component(purified)
        assert ratio == pytest.approx(1.0, abs=1e-12)
        assert np.real(np.vdot(c, purified @ c)) == pytest.approx(np.real(np.vdot(c, W @ c)))
        assert np.linalg.eigvalsh(W - purified)[0] >= -1e-9 * np.trace(W).real

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_reduce_rank_keeps_constraints(self, seed):
        """Test rank one with two trace constraints on a full-rank 4x4 block."""
        rng = np.random.default_rng(seed)
        W = random_hermitian(rng, 4, psd=True)
        constraints = [random_hermitian(rng, 4, psd=True) for _ in range(2)]

        reduced = reduce_rank(W, constraints)

        eigenvalues = np.linalg.eigvalsh(reduced)
        assert eigenvalues[0] >= -1e-9 * eigenvalues[-1]
        assert eigenvalues[-2] <= 1e-9 * eigenvalues[-1]
        for A in constraints:
            assert np.trace(A @ reduced).real == pytest.approx(np.trace(A @ W).real, rel=1e-8)
        assert np.trace(reduced).real <= np.trace(W).real * (1 + 1e-12)

    def test_reduce_rank_stops_at_constraint_count(self):
        """Test that five constraints leave rank at most two."""
        rng = np.random.default_rng(4)
        W = random_hermitian(rng, 4, psd=True)
        constraints = [random_hermitian(rng, 4, psd=True) for _ in range(5)]

        reduced = reduce_rank(W, constraints)

        eigenvalues = np.linalg.eigvalsh(reduced)
        assert np.sum(eigenvalues > 1e-9 * eigenvalues[-1]) <= 2
        for A in constraints:
            assert np.trace(A @ reduced).real == pytest.approx(np.trace(A @ W).real, rel=1e-8)

    def test_rank_one_input_unchanged(self):
        """Test that a rank-one block is returned as is."""
        v = np.array([1.0, 2.0j, -1.0])
        W = np.outer(v, v.conj())

        np.testing.assert_allclose(reduce_rank(W, [np.eye(3)]), W, atol=1e-12)


def project_budget(blocks, budget=1.0):
    """Frobenius projection of Hermitian blocks onto {X_b PSD, sum_b Tr X_b <= budget}."""
    eigvals, eigvecs = np.linalg.eigh(blocks)
    flat = eigvals.ravel()
    clipped = np.clip(flat, 0.0, None)
    if clipped.sum() > budget:
        ordered = np.sort(flat)[::-1]
        cumulative = np.cumsum(ordered) - budget
        index = np.flatnonzero(ordered - cumulative / np.arange(1, flat.size + 1) > 0)[-1]
        clipped = np.clip(flat - cumulative[index] / (index + 1), 0.0, None)
    scaled = eigvecs * clipped.reshape(eigvals.shape)[:, None, :]
    return scaled @ eigvecs.conj().transpose(0, 2, 1)


def projected_gradient(gradient, project, start, step, tol=1e-8, max_iter=100_000):
    """Projected-gradient ascent stopped once the gradient mapping is below tol."""
    x = project(start)
    for _ in range(max_iter):
        candidate = project(x + step * gradient(x))
        mapping = np.linalg.norm(candidate - x) / step
        x = candidate
        if mapping <= tol:
            break
    return x


@pytest.mark.slow
class TestProjectedGradientReference:
    """
    Test the barrier method against projected-gradient ascent on
    beamforming-shaped programs: a common block and two private 2x2 blocks,
    log terms per user, a linear power price and a shared power budget.
    """

    @pytest.mark.parametrize("seed", range(50))
    def test_objective_matches(self, seed):
        """Test agreement of the optimal objective within 1e-5 relative."""
        rng = np.random.default_rng(1000 + seed)
        scales = rng.uniform(0.8, 1.5, 2)
        Q = [s**2 * random_hermitian(rng, 2, psd=True) / 2.0 for s in scales]
        weights = rng.uniform(0.5, 2.0, 2)
        price = float(rng.uniform(0.0, 0.2))

        names = ["W0", "W1", "W2"]
        program = ConeProgram()
        for name in names:
            program.add_block(name, 2)
        program.maximize(program.form({name: -price * np.eye(2) for name in names}))
        for k in range(2):
            program.add_log_term(weights[k], program.form({"W0": Q[k], names[k + 1]: Q[k]}, 1.0))
        program.add_inequality("power", program.trace_form(names, -1.0, 1.0))
        solution = solve(program)

        def arguments(blocks):
            return [
                1.0 + np.real(np.trace(Q[k] @ (blocks[0] + blocks[k + 1]))) for k in range(2)
            ]

        def value(blocks):
            total = -price * np.real(np.trace(blocks.sum(axis=0)))
            return float(total + np.dot(weights, np.log(arguments(blocks))))

        def gradient(blocks):
            grad = np.stack([-price * np.eye(2, dtype=complex)] * 3)
            for k, argument in enumerate(arguments(blocks)):
                grad[0] += weights[k] * Q[k] / argument
                grad[k + 1] += weights[k] * Q[k] / argument
            return grad

        lipschitz = sum(2.0 * w * np.linalg.norm(q) ** 2 for w, q in zip(weights, Q))
        start = np.stack([np.eye(2, dtype=complex) / 6.0] * 3)
        reference = projected_gradient(gradient, project_budget, start, 1.0 / lipschitz)

        assert solution.status == SolveStatus.OPTIMAL
        expected = value(reference)
        assert solution.objective == pytest.approx(expected, rel=1e-5, abs=1e-8)
        assert solution.dual_bound >= solution.objective - 1e-9

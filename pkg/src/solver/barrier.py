"""Primal log-barrier interior-point method for ConeProgram.

Complex blocks are solved in their real symmetric embedding. Each centering
step is a damped Newton step on

    phi_t(X) = -t f0(X) - sum_b logdet X_b - sum_i ln g_i(X) - sum_i ln h_i(X)

with the equality constraints kept through the KKT system. The Hessian is
the log-det term plus a sum of rank-one terms, so the Newton system is
reduced to a small dense system in the rank-one and equality directions.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg

from src.solver.embedding import embed_coefficient, embed_variable, recover_variable
from src.solver.program import AffineForm, ConeProgram, ConeSolution, SolveStatus

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 500

ARMIJO_SLOPE = 0.25
STEP_SHRINK = 0.5
MIN_STEP = 1e-14
FULL_STEP_DECREMENT = 0.25
CENTERING_TOL = 1e-10
MU_START = 10.0
MU_MIN = 2.0
MU_MAX = 100.0
T_START = 1.0
REGULARIZATION = 1e-10


class FormStack:
    """
    A list of affine forms over real symmetric blocks.

    Attributes:
        coeffs: Per block, an (n, d_b, d_b) array of coefficient matrices
        offsets: (n,) constant terms
    """

    def __init__(self, coeffs: List[np.ndarray], offsets: np.ndarray):
        self.coeffs = coeffs
        self.offsets = np.asarray(offsets, dtype=float)

    @property
    def size(self) -> int:
        return self.offsets.shape[0]

    def evaluate(self, X: List[np.ndarray]) -> np.ndarray:
        values = self.offsets.copy()
        if self.size == 0:
            return values
        for coeff, block in zip(self.coeffs, X):
            values += np.einsum("nij,ij->n", coeff, block)
        return values

    def combine(self, weights: np.ndarray) -> List[np.ndarray]:
        """Per-block sum_i weights[i] * coeffs[b][i]."""
        return [np.tensordot(weights, coeff, axes=1) for coeff in self.coeffs]

    def scaled_rows(self, factors: np.ndarray) -> List[np.ndarray]:
        return [coeff * factors[:, None, None] for coeff in self.coeffs]

    @classmethod
    def empty(cls, dims: List[int]) -> "FormStack":
        return cls([np.zeros((0, d, d)) for d in dims], np.zeros(0))


@dataclass
class RealProgram:
    """ConeProgram compiled to real symmetric blocks."""

    dims: List[int]
    objective: FormStack
    log_weights: np.ndarray
    log_args: FormStack
    inequalities: FormStack
    logc_linear: FormStack
    logc_args: FormStack
    logc_weights: np.ndarray
    equalities: FormStack

    @property
    def degree(self) -> float:
        """Barrier degree: block sizes plus scalar constraints."""
        return float(sum(self.dims) + self.inequalities.size + self.logc_weights.shape[0])


@dataclass
class _Point:
    X: List[np.ndarray]
    chol: List[np.ndarray]
    log_args: np.ndarray
    ineq: np.ndarray
    logc_linear: np.ndarray
    logc_args: np.ndarray
    logc_values: np.ndarray
    objective: float


def _stack_forms(
    program: ConeProgram,
    forms: List[AffineForm],
) -> FormStack:
    coeffs = [np.zeros((len(forms), b.real_dim, b.real_dim)) for b in program.blocks]
    index = {block.name: i for i, block in enumerate(program.blocks)}
    offsets = np.zeros(len(forms))
    for row, form in enumerate(forms):
        offsets[row] = form.offset
        for name, coeff in form.coeffs.items():
            b = index[name]
            coeffs[b][row] = embed_coefficient(coeff, program.blocks[b].kind)
    return FormStack(coeffs, offsets)


def compile_program(program: ConeProgram) -> RealProgram:
    """Embed every block and form of a ConeProgram in real symmetric form."""
    return RealProgram(
        dims=[block.real_dim for block in program.blocks],
        objective=_stack_forms(program, [program.objective]),
        log_weights=np.array([term.weight for term in program.log_terms], dtype=float),
        log_args=_stack_forms(program, [term.argument for term in program.log_terms]),
        inequalities=_stack_forms(program, [item.form for item in program.inequalities]),
        logc_linear=_stack_forms(program, [item.linear for item in program.log_constraints]),
        logc_args=_stack_forms(program, [item.argument for item in program.log_constraints]),
        logc_weights=np.array(
            [item.weight for item in program.log_constraints], dtype=float
        ),
        equalities=_stack_forms(program, [item.form for item in program.equalities]),
    )


def _evaluate(prog: RealProgram, X: List[np.ndarray]) -> Optional[_Point]:
    """Evaluate all functionals; None when X is outside the barrier domain."""
    chol = []
    for block in X:
        if not np.all(np.isfinite(block)):
            return None
        try:
            chol.append(scipy.linalg.cholesky(block, lower=True))
        except scipy.linalg.LinAlgError:
            return None

    log_args = prog.log_args.evaluate(X)
    ineq = prog.inequalities.evaluate(X)
    logc_args = prog.logc_args.evaluate(X)
    if np.any(log_args <= 0) or np.any(ineq <= 0) or np.any(logc_args <= 0):
        return None
    logc_linear = prog.logc_linear.evaluate(X)
    logc_values = logc_linear + prog.logc_weights * np.log(logc_args)
    if np.any(logc_values <= 0):
        return None

    objective = float(prog.objective.evaluate(X)[0])
    objective += float(np.dot(prog.log_weights, np.log(log_args)))
    return _Point(
        X=X,
        chol=chol,
        log_args=log_args,
        ineq=ineq,
        logc_linear=logc_linear,
        logc_args=logc_args,
        logc_values=logc_values,
        objective=objective,
    )


def _barrier_value(point: _Point, t: float) -> float:
    logdet = sum(2.0 * np.sum(np.log(np.diag(c))) for c in point.chol)
    return (
        -t * point.objective
        - logdet
        - float(np.sum(np.log(point.ineq)))
        - float(np.sum(np.log(point.logc_values)))
    )


def _newton_direction(
    prog: RealProgram,
    point: _Point,
    t: float,
) -> Optional[Tuple[List[np.ndarray], float]]:
    """Newton step and squared decrement at point; None on linear-algebra failure."""
    X = point.X
    inverses = [
        scipy.linalg.cho_solve((c, True), np.eye(c.shape[0])) for c in point.chol
    ]

    log_scale = prog.log_weights / point.log_args
    ineq_scale = 1.0 / point.ineq
    logc_ratio = prog.logc_weights / point.logc_args
    logc_scale = 1.0 / point.logc_values

    objective_coeffs = prog.objective.combine(np.ones(1))
    log_grad = prog.log_args.combine(log_scale)
    ineq_grad = prog.inequalities.combine(ineq_scale)
    logc_linear_grad = prog.logc_linear.combine(logc_scale)
    logc_arg_grad = prog.logc_args.combine(logc_ratio * logc_scale)

    grad = []
    for b in range(len(X)):
        g = (
            -t * (objective_coeffs[b] + log_grad[b])
            - inverses[b]
            - ineq_grad[b]
            - logc_linear_grad[b]
            - logc_arg_grad[b]
        )
        grad.append(0.5 * (g + g.T))

    # rank-one Hessian directions followed by equality directions
    log_cols = prog.log_args.scaled_rows(np.sqrt(t * prog.log_weights) / point.log_args)
    ineq_cols = prog.inequalities.scaled_rows(ineq_scale)
    logc_grad_cols = [
        (lin + ratio_arg) * logc_scale[:, None, None]
        for lin, ratio_arg in zip(
            prog.logc_linear.coeffs, prog.logc_args.scaled_rows(logc_ratio)
        )
    ]
    logc_curv_cols = prog.logc_args.scaled_rows(
        np.sqrt(prog.logc_weights * logc_scale) / point.logc_args
    )
    num_rank_one = (
        prog.log_args.size + prog.inequalities.size + 2 * prog.logc_weights.shape[0]
    )

    cols = []
    for b in range(len(X)):
        cols.append(
            np.concatenate(
                [
                    log_cols[b],
                    ineq_cols[b],
                    logc_grad_cols[b],
                    logc_curv_cols[b],
                    prog.equalities.coeffs[b],
                ],
                axis=0,
            )
        )

    neg_grad_mapped = [X[b] @ (-grad[b]) @ X[b] for b in range(len(X))]
    num_cols = cols[0].shape[0]
    if num_cols == 0:
        direction = neg_grad_mapped
    else:
        mapped_cols = [X[b] @ cols[b] @ X[b] for b in range(len(X))]
        gram = sum(
            np.einsum("pij,qij->pq", cols[b], mapped_cols[b]) for b in range(len(X))
        )
        rhs = sum(
            np.einsum("pij,ij->p", cols[b], neg_grad_mapped[b]) for b in range(len(X))
        )
        system = gram.copy()
        system[np.arange(num_rank_one), np.arange(num_rank_one)] += 1.0
        rhs = rhs.copy()
        rhs[num_rank_one:] += prog.equalities.evaluate(X)
        system = 0.5 * (system + system.T)
        solution = solve_reduced_system(system, rhs)
        if not np.all(np.isfinite(solution)):
            return None
        direction = [
            neg_grad_mapped[b] - np.tensordot(solution, mapped_cols[b], axes=1)
            for b in range(len(X))
        ]

    direction = [0.5 * (d + d.T) for d in direction]
    decrement_sq = -sum(float(np.sum(grad[b] * direction[b])) for b in range(len(X)))
    if not np.isfinite(decrement_sq):
        return None
    return direction, decrement_sq


def solve_reduced_system(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Solve the symmetric reduced Newton system.

    An ill-conditioned system is logged at debug level and re-solved with a
    diagonal shift of REGULARIZATION times its largest diagonal entry.
    Singular systems fall back to least squares.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(system, rhs, assume_a="sym")
        except scipy.linalg.LinAlgWarning as w:
            logger.debug(f"Regularizing Newton system of size {system.shape[0]}: {w}")
        except (scipy.linalg.LinAlgError, ValueError):
            return scipy.linalg.lstsq(system, rhs)[0]

    scale = max(1.0, float(np.max(np.abs(np.diag(system)))))
    shifted = system + REGULARIZATION * scale * np.eye(system.shape[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(shifted, rhs, assume_a="sym")
        except (scipy.linalg.LinAlgError, ValueError):
            return scipy.linalg.lstsq(system, rhs)[0]


def _line_search(
    prog: RealProgram,
    point: _Point,
    direction: List[np.ndarray],
    decrement_sq: float,
    t: float,
) -> Optional[_Point]:
    """Damped step: full Newton step near the center, Armijo backtracking otherwise."""
    step = 1.0
    full_step_zone = decrement_sq < FULL_STEP_DECREMENT**2
    current = _barrier_value(point, t) if not full_step_zone else 0.0
    while step > MIN_STEP:
        trial = [x + step * d for x, d in zip(point.X, direction)]
        candidate = _evaluate(prog, trial)
        if candidate is not None:
            if full_step_zone:
                return candidate
            if _barrier_value(candidate, t) <= current - ARMIJO_SLOPE * step * decrement_sq:
                return candidate
        step *= STEP_SHRINK
    return None


@dataclass
class _BarrierResult:
    status: SolveStatus
    point: _Point
    t: float
    iterations: int
    decrement_sq: float
    objective_path: List[float]
    stopped_early: bool = False


def _run_barrier(
    prog: RealProgram,
    start: _Point,
    tol: float,
    max_iter: int,
    stop_when: Optional[Callable[[_Point], bool]] = None,
) -> _BarrierResult:
    """Path-following loop from a strictly feasible start."""
    point = start
    t = T_START
    mu = MU_START
    iterations = 0
    decrement_sq = float("inf")
    path: List[float] = []

    while True:
        steps = 0
        while True:
            if iterations >= max_iter:
                return _BarrierResult(
                    SolveStatus.MAX_ITER, point, t, iterations, decrement_sq, path
                )
            newton = _newton_direction(prog, point, t)
            if newton is None:
                logger.warning("Newton system could not be solved")
                return _BarrierResult(
                    SolveStatus.NUMERICAL_FAILURE, point, t, iterations, decrement_sq, path
                )
            direction, decrement_sq = newton
            if decrement_sq / 2.0 <= CENTERING_TOL:
                break
            candidate = _line_search(prog, point, direction, decrement_sq, t)
            iterations += 1
            steps += 1
            if candidate is None:
                if decrement_sq < 1e-6:
                    break
                logger.warning(
                    f"Line search stalled at t={t:.3e} (decrement^2={decrement_sq:.3e})"
                )
                return _BarrierResult(
                    SolveStatus.NUMERICAL_FAILURE, point, t, iterations, decrement_sq, path
                )
            point = candidate
            if stop_when is not None and stop_when(point):
                return _BarrierResult(
                    SolveStatus.OPTIMAL, point, t, iterations, decrement_sq, path, True
                )

        path.append(point.objective)
        gap = prog.degree / t
        if gap <= tol * max(1.0, abs(point.objective)):
            return _BarrierResult(
                SolveStatus.OPTIMAL, point, t, iterations, decrement_sq, path
            )
        if steps <= 5:
            mu = min(2.0 * mu, MU_MAX)
        elif steps > 20:
            mu = max(mu / 2.0, MU_MIN)
        t *= mu


def _project_equalities(
    prog: RealProgram,
    hint: List[np.ndarray],
) -> Optional[List[np.ndarray]]:
    """Closest point to hint (Frobenius norm) satisfying the equalities."""
    eq = prog.equalities
    if eq.size == 0:
        return hint
    gram = sum(np.einsum("pij,qij->pq", c, c) for c in eq.coeffs)
    residual = eq.evaluate(hint)
    multipliers = scipy.linalg.lstsq(gram, residual)[0]
    adjustments = eq.combine(multipliers)
    projected = [h - a for h, a in zip(hint, adjustments)]
    remaining = np.max(np.abs(eq.evaluate(projected)))
    scale = max(1.0, float(np.max(np.abs(eq.offsets), initial=0.0)))
    if remaining > 1e-8 * scale:
        logger.debug(f"Equality constraints inconsistent (residual {remaining:.3e})")
        return None
    return projected


def _with_slack_block(stack: FormStack, kappa: np.ndarray) -> FormStack:
    """Forms of (Y, tau) equal to the original at X = Y - tau*I plus kappa*tau."""
    traces = sum(np.einsum("nii->n", c) for c in stack.coeffs) if stack.coeffs else 0.0
    tau_coeff = (kappa - traces)[:, None, None] if stack.size else np.zeros((0, 1, 1))
    return FormStack(list(stack.coeffs) + [tau_coeff], stack.offsets.copy())


def _relaxation(values: np.ndarray, tau0: float) -> np.ndarray:
    return np.maximum(0.0, -values) / tau0 + 1.0


def _find_interior(
    prog: RealProgram,
    hint: List[np.ndarray],
    tol: float,
    max_iter: int,
) -> Tuple[Optional[_Point], SolveStatus, int]:
    """
    Strictly feasible starting point.

    Returns:
        (point, status, newton iterations spent)
    """
    X0 = _project_equalities(prog, hint)
    if X0 is None:
        return None, SolveStatus.INFEASIBLE, 0
    point = _evaluate(prog, X0)
    if point is not None:
        return point, SolveStatus.OPTIMAL, 0

    min_eig = min(float(np.linalg.eigvalsh(x)[0]) for x in X0)
    tau0 = max(1.0, 1.0 - min_eig)
    dims = prog.dims + [1]

    log_args = prog.log_args.evaluate(X0)
    ineq = prog.inequalities.evaluate(X0)
    logc_args = prog.logc_args.evaluate(X0)
    kappa_m = _relaxation(logc_args, tau0)
    shifted_args = logc_args + kappa_m * tau0
    logc_values = prog.logc_linear.evaluate(X0) + prog.logc_weights * np.log(shifted_args)
    kappa_l = _relaxation(logc_values, tau0)

    Y0 = [x + tau0 * np.eye(x.shape[0]) for x in X0]
    bound = 10.0 * (sum(float(np.trace(y)) for y in Y0) + tau0) + 10.0
    bound_stack = FormStack(
        [-np.eye(d)[None, :, :] for d in prog.dims] + [-np.ones((1, 1, 1))],
        np.array([bound]),
    )

    ineq_stack = _with_slack_block(prog.inequalities, _relaxation(ineq, tau0))
    log_arg_stack = _with_slack_block(prog.log_args, _relaxation(log_args, tau0))
    combined_ineq = FormStack(
        [
            np.concatenate([a, b, c], axis=0)
            for a, b, c in zip(ineq_stack.coeffs, log_arg_stack.coeffs, bound_stack.coeffs)
        ],
        np.concatenate([ineq_stack.offsets, log_arg_stack.offsets, bound_stack.offsets]),
    )
    objective = FormStack(
        [np.zeros((1, d, d)) for d in prog.dims] + [-np.ones((1, 1, 1))],
        np.zeros(1),
    )
    phase_one = RealProgram(
        dims=dims,
        objective=objective,
        log_weights=np.zeros(0),
        log_args=FormStack.empty(dims),
        inequalities=combined_ineq,
        logc_linear=_with_slack_block(prog.logc_linear, kappa_l),
        logc_args=_with_slack_block(prog.logc_args, kappa_m),
        logc_weights=prog.logc_weights.copy(),
        equalities=_with_slack_block(prog.equalities, np.zeros(prog.equalities.size)),
    )

    start = _evaluate(phase_one, Y0 + [np.array([[tau0]])])
    if start is None:
        logger.warning("Phase-one start is not interior")
        return None, SolveStatus.NUMERICAL_FAILURE, 0

    found: List[_Point] = []

    def original_point(candidate: _Point) -> bool:
        tau = float(candidate.X[-1][0, 0])
        X = [y - tau * np.eye(y.shape[0]) for y in candidate.X[:-1]]
        evaluated = _evaluate(prog, X)
        if evaluated is not None:
            found.append(evaluated)
            return True
        return False

    result = _run_barrier(phase_one, start, tol, max_iter, stop_when=original_point)
    if found:
        logger.debug(f"Phase one found an interior point in {result.iterations} steps")
        return found[-1], SolveStatus.OPTIMAL, result.iterations
    if result.status == SolveStatus.OPTIMAL:
        tau = float(result.point.X[-1][0, 0])
        if tau <= np.sqrt(tol) * tau0:
            logger.debug(f"Phase one stalled on the boundary of the feasible set (tau={tau:.3e})")
            return None, SolveStatus.NUMERICAL_FAILURE, result.iterations
        logger.debug(f"Phase one converged without interior point (tau={tau:.3e})")
        return None, SolveStatus.INFEASIBLE, result.iterations
    return None, result.status, result.iterations


def _initial_hint(program: ConeProgram) -> List[np.ndarray]:
    hint = []
    for block in program.blocks:
        value = None
        if program.initial_point is not None:
            value = program.initial_point.get(block.name)
        if value is None:
            hint.append(np.eye(block.real_dim))
        else:
            embedded = embed_variable(np.atleast_2d(value), block.kind)
            hint.append(0.5 * (embedded + embedded.T))
    return hint


def _recover(program: ConeProgram, X: List[np.ndarray]) -> dict:
    return {
        block.name: recover_variable(x, block.kind)
        for block, x in zip(program.blocks, X)
    }


def solve(
    program: ConeProgram,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ConeSolution:
    """
    Solve a ConeProgram by the barrier method.

    Args:
        program: Program to solve
        tol: Relative duality-gap tolerance (also bounds the residuals)
        max_iter: Cap on Newton steps, phase one included

    Returns:
        ConeSolution; failures are reported through its status
    """
    prog = compile_program(program)
    hint = _initial_hint(program)

    start, status, spent = _find_interior(prog, hint, tol, max_iter)
    if start is None:
        logger.debug(f"No interior point: {status.value}")
        return ConeSolution(
            status=status,
            values=_recover(program, hint),
            objective=float("-inf"),
            primal_residual=float("inf"),
            dual_residual=float("inf"),
            barrier_parameter=float("nan"),
            dual_bound=float("inf"),
            iterations=spent,
        )

    result = _run_barrier(prog, start, tol, max_iter - spent)
    point = result.point
    primal_residual = (
        float(np.max(np.abs(prog.equalities.evaluate(point.X))))
        if prog.equalities.size
        else 0.0
    )
    dual_residual = float(np.sqrt(max(result.decrement_sq, 0.0)) / result.t)
    status = result.status
    if status == SolveStatus.OPTIMAL and max(primal_residual, dual_residual) > tol:
        logger.warning(
            f"Residuals above tolerance (primal {primal_residual:.2e}, dual {dual_residual:.2e})"
        )
        status = SolveStatus.NUMERICAL_FAILURE

    solution = ConeSolution(
        status=status,
        values=_recover(program, point.X),
        objective=point.objective,
        primal_residual=primal_residual,
        dual_residual=dual_residual,
        barrier_parameter=1.0 / result.t,
        dual_bound=point.objective + prog.degree / result.t,
        iterations=spent + result.iterations,
        objective_path=result.objective_path,
    )
    logger.debug(
        f"Solved program: status={status.value}, objective={solution.objective:.6g}, "
        f"iterations={solution.iterations}"
    )
    return solution

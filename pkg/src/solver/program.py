"""Convex program over Hermitian PSD blocks with logarithmic terms.

maximize   <C, X> + c0 + sum_j w_j ln(a_j(X))
subject to g_i(X) >= 0
           l_i(X) + beta_i ln(m_i(X)) >= 0
           e_i(X) = 0
           X_b PSD for every block b

All functionals are affine in the blocks: sum_b Tr(A_b X_b) + offset.
"""
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Literal, Optional

import numpy as np

from src.errors import DomainError, GuardrailError
from src.solver.embedding import check_hermitian

logger = logging.getLogger(__name__)

MAX_REAL_DIMENSION = 400

BlockKind = Literal["complex", "real"]


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class Block:
    """A PSD matrix variable."""

    name: str
    dim: int
    kind: BlockKind = "complex"

    @property
    def real_dim(self) -> int:
        return 2 * self.dim if self.kind == "complex" else self.dim


@dataclass
class AffineForm:
    """sum_b Tr(coeffs[b] X_b) + offset."""

    coeffs: Dict[str, np.ndarray] = field(default_factory=dict)
    offset: float = 0.0

    def evaluate(self, values: Dict[str, np.ndarray]) -> float:
        total = self.offset
        for name, coeff in self.coeffs.items():
            total += float(np.real(np.trace(coeff @ values[name])))
        return total

    def plus(self, other: "AffineForm", scale: float = 1.0) -> "AffineForm":
        """self + scale * other."""
        coeffs = {name: coeff.copy() for name, coeff in self.coeffs.items()}
        for name, coeff in other.coeffs.items():
            if name in coeffs:
                coeffs[name] = coeffs[name] + scale * coeff
            else:
                coeffs[name] = scale * coeff
        return AffineForm(coeffs=coeffs, offset=self.offset + scale * other.offset)

    def scaled(self, scale: float) -> "AffineForm":
        return AffineForm(
            coeffs={name: scale * coeff for name, coeff in self.coeffs.items()},
            offset=scale * self.offset,
        )


@dataclass
class LogTerm:
    weight: float
    argument: AffineForm


@dataclass
class LogConstraint:
    """linear(X) + weight * ln(argument(X)) >= 0."""

    name: str
    linear: AffineForm
    weight: float
    argument: AffineForm


@dataclass
class NamedForm:
    name: str
    form: AffineForm


@dataclass
class ConeSolution:
    """Solver outcome; values are in each block's native field."""

    status: SolveStatus
    values: Dict[str, np.ndarray]
    objective: float
    primal_residual: float
    dual_residual: float
    barrier_parameter: float
    dual_bound: float
    iterations: int
    objective_path: List[float] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


class ConeProgram:
    """Builder for the convex subproblems solved by the barrier method."""

    def __init__(self):
        self.blocks: List[Block] = []
        self.objective = AffineForm()
        self.log_terms: List[LogTerm] = []
        self.inequalities: List[NamedForm] = []
        self.log_constraints: List[LogConstraint] = []
        self.equalities: List[NamedForm] = []
        self.initial_point: Optional[Dict[str, np.ndarray]] = None

    def add_block(self, name: str, dim: int, kind: BlockKind = "complex") -> Block:
        """
        Declare a PSD block.

        Args:
            name: Unique block name
            dim: Matrix dimension (Hermitian or real symmetric)
            kind: 'complex' (Hermitian) or 'real' (symmetric)

        Returns:
            The block
        """
        if any(block.name == name for block in self.blocks):
            raise DomainError(f"Duplicate block name: {name}")
        if dim < 1:
            raise DomainError(f"Block dimension must be positive, got {dim}")
        block = Block(name=name, dim=dim, kind=kind)
        if block.real_dim > MAX_REAL_DIMENSION:
            raise GuardrailError(
                f"Block {name} embeds to {block.real_dim}x{block.real_dim}, "
                f"above the {MAX_REAL_DIMENSION} limit"
            )
        self.blocks.append(block)
        return block

    def block(self, name: str) -> Block:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    def form(
        self,
        coeffs: Optional[Dict[str, np.ndarray]] = None,
        offset: float = 0.0,
    ) -> AffineForm:
        """Build a validated affine form over declared blocks."""
        checked = {}
        for name, coeff in (coeffs or {}).items():
            block = self.block(name)
            coeff = check_hermitian(coeff, name=f"coefficient of {name}")
            if coeff.shape != (block.dim, block.dim):
                raise DomainError(
                    f"Coefficient of {name} has shape {coeff.shape}, block is {block.dim}"
                )
            checked[name] = coeff
        return AffineForm(coeffs=checked, offset=float(offset))

    def trace_form(self, names: List[str], scale: float = 1.0, offset: float = 0.0) -> AffineForm:
        """scale * sum of traces of the named blocks + offset."""
        return self.form(
            {name: scale * np.eye(self.block(name).dim) for name in names}, offset
        )

    def maximize(self, objective: AffineForm) -> None:
        self.objective = objective

    def add_log_term(self, weight: float, argument: AffineForm) -> None:
        """Add weight * ln(argument) to the objective."""
        if weight < 0:
            raise DomainError(f"Log-term weight must be nonnegative, got {weight}")
        if weight > 0:
            self.log_terms.append(LogTerm(weight=float(weight), argument=argument))

    def add_inequality(self, name: str, form: AffineForm) -> None:
        """Require form >= 0."""
        self.inequalities.append(NamedForm(name=name, form=form))

    def add_log_constraint(
        self,
        name: str,
        linear: AffineForm,
        weight: float,
        argument: AffineForm,
    ) -> None:
        """Require linear + weight * ln(argument) >= 0 (concave in X)."""
        if weight < 0:
            raise DomainError(f"Log-constraint weight must be nonnegative, got {weight}")
        if weight == 0:
            self.add_inequality(name, linear)
            return
        self.log_constraints.append(
            LogConstraint(name=name, linear=linear, weight=float(weight), argument=argument)
        )

    def add_equality(self, name: str, form: AffineForm) -> None:
        """Require form == 0."""
        self.equalities.append(NamedForm(name=name, form=form))

    def pin_diagonal(self, name: str, value: float = 1.0) -> None:
        """Fix every diagonal entry of a block to value."""
        dim = self.block(name).dim
        for i in range(dim):
            unit = np.zeros((dim, dim))
            unit[i, i] = 1.0
            self.add_equality(f"{name}[{i},{i}]", self.form({name: unit}, -value))

    def set_initial_point(self, values: Dict[str, np.ndarray]) -> None:
        """Starting hint; used directly when strictly feasible."""
        self.initial_point = {name: np.asarray(value) for name, value in values.items()}

    @property
    def real_dimension(self) -> int:
        """Barrier degree contributed by the PSD blocks."""
        return sum(block.real_dim for block in self.blocks)

    def evaluate_objective(self, values: Dict[str, np.ndarray]) -> float:
        """Objective value at the given block values (-inf outside the log domain)."""
        total = self.objective.evaluate(values)
        for term in self.log_terms:
            argument = term.argument.evaluate(values)
            if argument <= 0:
                return float("-inf")
            total += term.weight * np.log(argument)
        return float(total)

    def constraint_violation(self, values: Dict[str, np.ndarray]) -> float:
        """Largest violation of the inequality, log and equality constraints."""
        worst = 0.0
        for item in self.inequalities:
            worst = max(worst, -item.form.evaluate(values))
        for item in self.log_constraints:
            argument = item.argument.evaluate(values)
            if argument <= 0:
                return float("inf")
            value = item.linear.evaluate(values) + item.weight * np.log(argument)
            worst = max(worst, -value)
        for item in self.equalities:
            worst = max(worst, abs(item.form.evaluate(values)))
        return float(worst)

    def inequality_slack(self, values: Dict[str, np.ndarray]) -> float:
        """Smallest inequality or log-constraint value (inf when there are none)."""
        slack = float("inf")
        for item in self.inequalities:
            slack = min(slack, item.form.evaluate(values))
        for item in self.log_constraints:
            argument = item.argument.evaluate(values)
            if argument <= 0:
                return float("-inf")
            slack = min(slack, item.linear.evaluate(values) + item.weight * np.log(argument))
        return float(slack)

    def to_text(self) -> str:
        """Plain-text dump of dimensions, coefficients and constraints."""
        out = io.StringIO()

        def write_form(label: str, form: AffineForm) -> None:
            out.write(f"{label} offset {form.offset:.12g}\n")
            for name, coeff in form.coeffs.items():
                out.write(f"  {name}\n")
                for row in np.atleast_2d(coeff):
                    out.write("    " + " ".join(f"{value:.6g}" for value in row) + "\n")

        out.write("blocks\n")
        for block in self.blocks:
            out.write(f"  {block.name} {block.kind} {block.dim}\n")
        write_form("objective", self.objective)
        for term in self.log_terms:
            write_form(f"log_term weight {term.weight:.12g}", term.argument)
        for item in self.inequalities:
            write_form(f"inequality {item.name}", item.form)
        for item in self.log_constraints:
            write_form(f"log_constraint {item.name} linear", item.linear)
            write_form(f"log_constraint {item.name} weight {item.weight:.12g} argument", item.argument)
        for item in self.equalities:
            write_form(f"equality {item.name}", item.form)
        return out.getvalue()

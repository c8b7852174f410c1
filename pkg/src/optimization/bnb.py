"""Branch and bound over binary IRS-user associations.

The association objective is

    chi(x) = sum_{n,k} U[n,k] x[n,k] - sum_n cost[n] max_k x[n,k]

over binary x with one IRS per user and at most `capacity` users per IRS.
Each node solves the linear relaxation (max terms replaced by epigraph
variables) for an upper bound and rounds it for a lower bound.
"""
import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from src.errors import InfeasibleError
from src.metrics.types import AssociationMatrix

logger = logging.getLogger(__name__)

BNB_TRACE_COLUMNS = ["node_id", "depth", "fixed_count", "upper", "lower", "pruned"]
ABSOLUTE_EPS = 1e-12
TIE_DECIMALS = 12

Fixed = Dict[Tuple[int, int], int]


@dataclass(eq=False)
class BnBNode:
    """
    One node of the search tree.

    Attributes:
        node_id: Creation order
        depth: Number of branchings from the root
        fixed: (n, k) -> 0/1 entries fixed by branching or forbidden at the root
        omega: Relaxed solution (None when the relaxation is infeasible)
        upper: Relaxation value (-inf when infeasible)
        lower: Objective of the rounded assignment (-inf when none)
        rounded: Rounded assignment
    """

    node_id: int
    depth: int
    fixed: Fixed = field(default_factory=dict)
    omega: Optional[np.ndarray] = None
    upper: float = float("-inf")
    lower: float = float("-inf")
    rounded: Optional[np.ndarray] = None


@dataclass(eq=False)
class BnBResult:
    """Best assignment found and the search audit trail."""

    assoc: AssociationMatrix
    objective: float
    upper: float
    eps: float
    nodes: int
    trace: pd.DataFrame


def association_objective(
    matrix: np.ndarray,
    utility: np.ndarray,
    irs_cost: np.ndarray,
) -> float:
    """chi(x) for a binary (N, K) matrix."""
    active = matrix.max(axis=1) if matrix.size else np.zeros(0)
    return float(np.sum(utility * matrix) - np.dot(irs_cost, active))


def solve_p15_relaxation(
    fixed: Fixed,
    utility: np.ndarray,
    irs_cost: np.ndarray,
    capacity: int,
) -> Tuple[Optional[np.ndarray], float]:
    """
    Linear relaxation of the association problem at a node.

    Args:
        fixed: Entries fixed to 0 or 1
        utility: (N, K) weighted utility B * weight_k * R[n, k]
        irs_cost: (N,) circuit-power penalty rho * L * P(b) per IRS
        capacity: Users per IRS

    Returns:
        (omega, U); (None, -inf) when the fixed entries make it infeasible
    """
    num_irs, num_users = utility.shape
    num_pairs = num_irs * num_users

    # variables: omega (n-major), then t_n
    cost = np.concatenate([-utility.ravel(), np.asarray(irs_cost, dtype=float)])

    epigraph = np.zeros((num_pairs, num_pairs + num_irs))
    capacity_rows = np.zeros((num_irs, num_pairs + num_irs))
    for n in range(num_irs):
        for k in range(num_users):
            i = n * num_users + k
            epigraph[i, i] = 1.0
            epigraph[i, num_pairs + n] = -1.0
            capacity_rows[n, i] = 1.0
    A_ub = np.vstack([epigraph, capacity_rows])
    b_ub = np.concatenate([np.zeros(num_pairs), np.full(num_irs, float(capacity))])

    A_eq = np.zeros((num_users, num_pairs + num_irs))
    for k in range(num_users):
        A_eq[k, [n * num_users + k for n in range(num_irs)]] = 1.0
    b_eq = np.ones(num_users)

    bounds = [(0.0, 1.0)] * (num_pairs + num_irs)
    for (n, k), value in fixed.items():
        bounds[n * num_users + k] = (float(value), float(value))

    result = linprog(
        cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if result.status == 2:
        return None, float("-inf")
    if not result.success:
        logger.warning(f"Association relaxation failed: {result.message}")
        return None, float("-inf")
    omega = np.clip(result.x[:num_pairs].reshape(num_irs, num_users), 0.0, 1.0)
    return omega, float(-result.fun)


def round_solution(
    omega: np.ndarray,
    utility: np.ndarray,
    irs_cost: np.ndarray,
    capacity: int,
    fixed: Optional[Fixed] = None,
) -> Tuple[np.ndarray, bool]:
    """
    Binary assignment from a relaxed solution.

    Each user goes to the IRS with the largest relaxed weight (smallest index
    on ties). Capacity excess is repaired greedily: the move of a user off an
    overloaded IRS that loses the least objective is applied until every IRS
    fits. Fixed entries are never changed.

    Returns:
        (matrix, feasible); feasible is False when repair fails
    """
    fixed = fixed or {}
    num_irs, num_users = omega.shape
    scores = np.round(np.array(omega, dtype=float), TIE_DECIMALS)
    pinned: Dict[int, int] = {}
    for (n, k), value in fixed.items():
        if value == 0:
            scores[n, k] = -np.inf
        else:
            pinned[k] = n

    matrix = np.zeros((num_irs, num_users), dtype=int)
    for k in range(num_users):
        n = pinned.get(k, int(np.argmax(scores[:, k])))
        matrix[n, k] = 1

    while True:
        loads = matrix.sum(axis=1)
        overloaded = np.flatnonzero(loads > capacity)
        if overloaded.size == 0:
            return matrix, True
        base = association_objective(matrix, utility, irs_cost)
        best_move = None
        best_loss = np.inf
        for n in overloaded:
            for k in np.flatnonzero(matrix[n]):
                if k in pinned:
                    continue
                for target in range(num_irs):
                    if target == n or loads[target] >= capacity:
                        continue
                    if fixed.get((target, int(k))) == 0:
                        continue
                    moved = matrix.copy()
                    moved[n, k] = 0
                    moved[target, k] = 1
                    loss = base - association_objective(moved, utility, irs_cost)
                    if loss < best_loss - 1e-15:
                        best_move, best_loss = (n, int(k), target), loss
        if best_move is None:
            logger.debug("Rounding repair found no admissible move")
            return matrix, False
        n, k, target = best_move
        matrix[n, k] = 0
        matrix[target, k] = 1


def branch_index(
    omega: np.ndarray,
    rounded: np.ndarray,
    fixed: Optional[Fixed] = None,
) -> Optional[Tuple[int, int]]:
    """
    Entry with the largest gap between relaxed and rounded values.

    Fixed entries are skipped; ties go to the lexicographically smallest
    (n, k).

    Returns:
        (n, k), or None when every entry is fixed
    """
    distance = np.round(np.abs(omega - rounded), TIE_DECIMALS)
    for (n, k) in (fixed or {}):
        distance[n, k] = -1.0
    if np.all(distance < 0):
        return None
    n, k = np.unravel_index(int(np.argmax(distance)), distance.shape)
    return int(n), int(k)


def _evaluate_node(
    node: BnBNode,
    utility: np.ndarray,
    irs_cost: np.ndarray,
    capacity: int,
) -> BnBNode:
    node.omega, node.upper = solve_p15_relaxation(node.fixed, utility, irs_cost, capacity)
    if node.omega is None:
        node.lower = float("-inf")
        return node
    rounded, feasible = round_solution(node.omega, utility, irs_cost, capacity, node.fixed)
    node.rounded = rounded
    node.lower = association_objective(rounded, utility, irs_cost) if feasible else float("-inf")
    return node


def bnb_solve(
    utility: np.ndarray,
    irs_cost: np.ndarray,
    capacity: int,
    rel_eps: float = 1e-6,
    forbidden: Optional[np.ndarray] = None,
) -> BnBResult:
    """
    Best-first branch and bound for the association problem.

    Args:
        utility: (N, K) weighted utilities
        irs_cost: (N,) per-IRS circuit-power penalty
        capacity: Users per IRS
        rel_eps: Stop once the best open upper bound is within
            rel_eps * |root upper bound| of the incumbent
        forbidden: Optional (N, K) boolean mask of pairs fixed to 0

    Returns:
        BnBResult

    Raises:
        InfeasibleError: no assignment satisfies the constraints
    """
    utility = np.asarray(utility, dtype=float)
    irs_cost = np.broadcast_to(np.asarray(irs_cost, dtype=float), (utility.shape[0],))
    counter = itertools.count()
    rows: Dict[int, dict] = {}

    def record(node: BnBNode, pruned: bool) -> None:
        rows[node.node_id] = {
            "node_id": node.node_id,
            "depth": node.depth,
            "fixed_count": len(node.fixed),
            "upper": node.upper,
            "lower": node.lower,
            "pruned": pruned,
        }

    root_fixed: Fixed = {}
    if forbidden is not None:
        for n, k in zip(*np.nonzero(forbidden)):
            root_fixed[(int(n), int(k))] = 0
    root = _evaluate_node(BnBNode(next(counter), 0, root_fixed), utility, irs_cost, capacity)
    if not np.isfinite(root.upper):
        record(root, True)
        logger.error("Association relaxation is infeasible at the root")
        raise InfeasibleError("No feasible IRS-user association", constraint="association")

    eps = rel_eps * abs(root.upper) if root.upper != 0 else ABSOLUTE_EPS
    best = root
    open_nodes: List[tuple] = []

    def push(node: BnBNode) -> None:
        heapq.heappush(open_nodes, (-node.lower, -node.upper, node.node_id, node))

    record(root, False)
    push(root)

    while open_nodes:
        global_upper = max(item[3].upper for item in open_nodes)
        if global_upper - best.lower <= eps:
            break
        _, _, _, node = heapq.heappop(open_nodes)
        if node.upper <= best.lower + eps:
            rows[node.node_id]["pruned"] = True
            continue
        index = branch_index(node.omega, node.rounded, node.fixed)
        if index is None:
            continue
        for value in (1, 0):
            child = BnBNode(next(counter), node.depth + 1, {**node.fixed, index: value})
            _evaluate_node(child, utility, irs_cost, capacity)
            if child.lower > best.lower:
                best = child
            promising = np.isfinite(child.upper) and child.upper > best.lower + eps
            record(child, not promising)
            if promising:
                push(child)

    for _, _, _, node in open_nodes:
        if node.upper <= best.lower + eps:
            rows[node.node_id]["pruned"] = True

    if not np.isfinite(best.lower):
        logger.error("Branch and bound found no feasible association")
        raise InfeasibleError("No feasible IRS-user association", constraint="association")

    upper = max([best.lower] + [item[3].upper for item in open_nodes])
    trace = pd.DataFrame(list(rows.values()), columns=BNB_TRACE_COLUMNS)
    logger.debug(
        f"Branch and bound: {len(rows)} nodes, objective {best.lower:.6g}, upper {upper:.6g}"
    )
    return BnBResult(
        assoc=AssociationMatrix(matrix=best.rounded),
        objective=best.lower,
        upper=upper,
        eps=eps,
        nodes=len(rows),
        trace=trace,
    )


def enumerate_assignments(
    utility: np.ndarray,
    irs_cost: np.ndarray,
    capacity: int,
) -> Tuple[Optional[np.ndarray], float]:
    """
    Exhaustive search over all N^K assignments (small instances only).

    Returns:
        (best matrix, best objective); (None, -inf) when none fits capacity
    """
    utility = np.asarray(utility, dtype=float)
    num_irs, num_users = utility.shape
    irs_cost = np.broadcast_to(np.asarray(irs_cost, dtype=float), (num_irs,))
    best, best_value = None, float("-inf")
    for serving in itertools.product(range(num_irs), repeat=num_users):
        matrix = np.zeros((num_irs, num_users), dtype=int)
        matrix[list(serving), list(range(num_users))] = 1
        if matrix.sum(axis=1).max() > capacity:
            continue
        value = association_objective(matrix, utility, irs_cost)
        if value > best_value:
            best, best_value = matrix, value
    return best, best_value

"""Rank-one extraction from relaxed PSD solutions."""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from src.solver.embedding import check_hermitian

logger = logging.getLogger(__name__)

RANK_ONE_THRESHOLD = 0.999
DEFAULT_CANDIDATES = 200


@dataclass(frozen=True, eq=False)
class RankOneResult:
    """
    Extracted vector.

    Attributes:
        vector: Rank-one factor (principal component or best random draw)
        ratio: lambda_max / Tr of the input matrix
        randomized: True when Gaussian randomization chose the vector
    """

    vector: np.ndarray
    ratio: float
    randomized: bool = False


def principal_component(W: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Scaled principal eigenvector of a PSD matrix.

    The global phase is fixed so that the last coordinate is real and
    nonnegative.

    Returns:
        (sqrt(lambda_max) * v, lambda_max / Tr)
    """
    eigenvalues, eigenvectors = scipy.linalg.eigh(W)
    top = max(float(eigenvalues[-1]), 0.0)
    vector = np.sqrt(top) * eigenvectors[:, -1]
    anchor = vector[-1]
    if abs(anchor) > 0:
        vector = vector * np.exp(-1j * np.angle(anchor))
    trace = float(np.real(np.trace(W)))
    ratio = top / trace if trace > 0 else 1.0
    return vector, min(ratio, 1.0)


def gaussian_candidates(
    W: np.ndarray,
    rng: np.random.Generator,
    num_candidates: int = DEFAULT_CANDIDATES,
) -> np.ndarray:
    """
    Draw vectors distributed CN(0, W).

    Args:
        W: Hermitian PSD covariance
        rng: Random generator
        num_candidates: Number of draws

    Returns:
        (num_candidates, d) array, one draw per row
    """
    eigenvalues, eigenvectors = scipy.linalg.eigh(W)
    factor = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    dim = W.shape[0]
    z = (
        rng.standard_normal((num_candidates, dim))
        + 1j * rng.standard_normal((num_candidates, dim))
    ) / np.sqrt(2.0)
    return z @ factor.T


def rank_one_extract(
    W: np.ndarray,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    score: Optional[Callable[[np.ndarray], float]] = None,
    rng: Optional[np.random.Generator] = None,
    num_candidates: int = DEFAULT_CANDIDATES,
    threshold: float = RANK_ONE_THRESHOLD,
    zero_tol: float = 1e-12,
) -> RankOneResult:
    """
    Rank-one factor of a relaxed solution.

    When lambda_max / Tr falls below threshold, Gaussian randomization picks
    the best of num_candidates projected draws (and the projected principal
    component) by score.

    Args:
        W: Hermitian PSD matrix
        project: Maps a draw onto the feasible set (default: rescale to Tr(W))
        score: Objective to maximize over candidates (default: x^H W x)
        rng: Generator for the draws (default seeded with 0)
        num_candidates: Number of random draws
        threshold: Ratio above which the principal component is used directly
        zero_tol: Trace below which W counts as zero

    Returns:
        RankOneResult
    """
    W = check_hermitian(W, name="relaxed solution")
    trace = float(np.real(np.trace(W)))
    if trace <= zero_tol:
        return RankOneResult(vector=np.zeros(W.shape[0], dtype=complex), ratio=1.0)

    vector, ratio = principal_component(W)
    if ratio >= threshold:
        return RankOneResult(vector=vector, ratio=ratio)

    logger.debug(f"Rank ratio {ratio:.4f} below {threshold}; randomizing")

    def default_project(candidate: np.ndarray) -> np.ndarray:
        norm_sq = float(np.sum(np.abs(candidate) ** 2))
        if norm_sq <= 0:
            return candidate
        return candidate * np.sqrt(trace / norm_sq)

    def default_score(candidate: np.ndarray) -> float:
        return float(np.real(candidate.conj() @ W @ candidate))

    project = project or default_project
    score = score or default_score
    rng = rng if rng is not None else np.random.default_rng(0)

    best = project(vector)
    best_score = score(best)
    randomized = False
    for draw in gaussian_candidates(W, rng, num_candidates):
        candidate = project(draw)
        value = score(candidate)
        if value > best_score:
            best, best_score, randomized = candidate, value, True
    return RankOneResult(vector=best, ratio=ratio, randomized=randomized)


def purify_toward(W: np.ndarray, channel: np.ndarray) -> np.ndarray:
    """
    Rank-one W c c^H W / (c^H W c).

    c^H W c is unchanged and W minus the result stays PSD, so Tr(A W) can
    only drop for every PSD A. W is returned as is when c^H W c vanishes.
    """
    u = W @ channel
    gain = float(np.real(np.vdot(channel, u)))
    if gain <= 0:
        return W
    return np.outer(u, u.conj()) / gain


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    basis = []
    for i in range(dim):
        unit = np.zeros((dim, dim), dtype=complex)
        unit[i, i] = 1.0
        basis.append(unit)
    for i in range(dim):
        for j in range(i + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0
            skew = np.zeros((dim, dim), dtype=complex)
            skew[i, j], skew[j, i] = 1j, -1j
            basis.extend([sym, skew])
    return basis


def reduce_rank(
    W: np.ndarray,
    constraints: list[np.ndarray],
    rank_tol: float = 1e-12,
) -> np.ndarray:
    """
    Lower the rank of a PSD matrix keeping Tr(A_i W) for every A_i.

    With W = V V^H of rank r, a Hermitian D orthogonal to every V^H A_i V
    exists while r^2 exceeds the number of constraints; W is replaced by
    V (I - D / lambda_max(D)) V^H, which drops the rank and (with the sign
    of D chosen so Tr(V^H V D) >= 0) does not raise the trace.

    Returns:
        PSD matrix of rank at most max(1, floor(sqrt(len(constraints))))
    """
    W = 0.5 * (W + W.conj().T)
    for _ in range(W.shape[0]):
        eigenvalues, eigenvectors = scipy.linalg.eigh(W)
        top = float(eigenvalues[-1])
        if top <= 0:
            return W
        keep = eigenvalues > rank_tol * top
        rank = int(keep.sum())
        if rank <= 1 or rank * rank <= len(constraints):
            return W
        V = eigenvectors[:, keep] * np.sqrt(eigenvalues[keep])
        basis = _hermitian_basis(rank)
        reduced = [V.conj().T @ A @ V for A in constraints]
        reduced = [R / np.linalg.norm(R) for R in reduced if np.linalg.norm(R) > 0]
        if reduced:
            system = np.array(
                [[float(np.real(np.trace(R @ B))) for B in basis] for R in reduced]
            )
            null = scipy.linalg.null_space(system)
        else:
            null = np.eye(len(basis))
        if null.shape[1] == 0:
            return W
        D = np.tensordot(null[:, 0], np.array(basis), axes=1)
        if float(np.real(np.trace(V.conj().T @ V @ D))) < 0:
            D = -D
        largest = float(scipy.linalg.eigvalsh(D)[-1])
        if largest <= 0:
            return W
        W = V @ (np.eye(rank) - D / largest) @ V.conj().T
        W = 0.5 * (W + W.conj().T)
        logger.debug(f"Reduced relaxed block from rank {rank}")
    return W

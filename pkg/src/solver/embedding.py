"""Real symmetric embedding of Hermitian matrix data.

A Hermitian A = R + iI maps to [[R, -I], [I, R]]. Traces against embedded
variables double, so coefficient matrices are embedded at half scale and
Tr(A X) = Tr(embed_coefficient(A) embed_complex(X)) exactly.
"""
import numpy as np

from src.errors import DomainError

HERMITIAN_TOL = 1e-10


def check_hermitian(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a square Hermitian (or real symmetric) matrix."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"{name} must be square, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise DomainError(f"{name} is not Hermitian")
    return matrix


def embed_complex(matrix: np.ndarray) -> np.ndarray:
    """
    Embed a Hermitian d x d matrix as a real symmetric 2d x 2d matrix.

    Args:
        matrix: Hermitian matrix

    Returns:
        [[Re, -Im], [Im, Re]]
    """
    matrix = check_hermitian(matrix)
    real = matrix.real
    imag = matrix.imag
    return np.block([[real, -imag], [imag, real]])


def embed_coefficient(matrix: np.ndarray, kind: str) -> np.ndarray:
    """Embed coefficient data so that traces are preserved."""
    if kind == "real":
        matrix = check_hermitian(matrix)
        if np.iscomplexobj(matrix) and np.any(matrix.imag != 0):
            raise DomainError("Real block coefficients must be real")
        return np.asarray(matrix.real, dtype=float)
    return 0.5 * embed_complex(matrix)


def embed_variable(matrix: np.ndarray, kind: str) -> np.ndarray:
    """Embed a variable value (no trace compensation)."""
    if kind == "real":
        return np.asarray(np.real(matrix), dtype=float)
    return embed_complex(matrix)


def recover_complex(embedded: np.ndarray) -> np.ndarray:
    """
    Hermitian matrix represented by a real symmetric 2d x 2d matrix.

    The embedded matrix need not have the exact block structure; the
    structured part is extracted, which leaves every embedded trace
    value unchanged and keeps positive semidefiniteness.

    Args:
        embedded: Real symmetric matrix of even dimension

    Returns:
        Hermitian d x d matrix
    """
    embedded = np.asarray(embedded, dtype=float)
    size = embedded.shape[0]
    if size % 2 or embedded.shape != (size, size):
        raise DomainError(f"Embedded block must be square with even size, got {embedded.shape}")
    d = size // 2
    top_left = embedded[:d, :d]
    top_right = embedded[:d, d:]
    bottom_left = embedded[d:, :d]
    bottom_right = embedded[d:, d:]
    real = 0.5 * (top_left + bottom_right)
    imag = 0.5 * (bottom_left - top_right)
    matrix = real + 1j * imag
    return 0.5 * (matrix + matrix.conj().T)


def recover_variable(embedded: np.ndarray, kind: str) -> np.ndarray:
    if kind == "real":
        return 0.5 * (embedded + embedded.T)
    return recover_complex(embedded)

"""Dense linear-algebra kernels shared by the identification modules.

Matrices are plain 2-D ``float64`` numpy arrays. The helpers here only add
input validation and the singular-value guard used by the pseudoinverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailureError

DEFAULT_REL_TOL = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float64 array (1-D input becomes a row)."""
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return A


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = U @ diag(singular_values) @ V.T``.

    ``U`` is m x r, ``V`` is n x r with r = min(m, n); singular values are
    sorted in descending order. No rank truncation is applied.
    """

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def svd(M) -> SvdFactors:
    A = as_matrix(M)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(U=U, singular_values=s, V=Vt.T)


def pseudoinverse(f: SvdFactors, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse from SVD factors.

    Singular values at or below ``rel_tol * s_max`` are treated as exact zeros.
    An all-zero matrix maps to the zero matrix of transposed shape.
    """
    if rel_tol < 0:
        raise InvalidInputError("rel_tol must be non-negative")
    s = f.singular_values
    m, n = f.shape
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((n, m))
    keep = s > rel_tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (f.V * inv) @ f.U.T


def pinv(M, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    return pseudoinverse(svd(M), rel_tol)


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a square matrix as a complex array."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"eigenvalues need a square matrix, got {A.shape}")
    if A.size == 0:
        return np.zeros(0, dtype=complex)
    try:
        return np.linalg.eigvals(A).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigenvalue iteration failed: {exc}") from exc


def spectral_radius(M) -> float:
    ev = eigenvalues(M)
    return float(np.max(np.abs(ev))) if ev.size else 0.0

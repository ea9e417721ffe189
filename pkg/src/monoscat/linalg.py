"""Dense complex linear algebra kernel.

Hermitian eigendecompositions, symmetric-definite generalized eigenproblems,
dense solves and matrix norms for small (N <= 64) matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import DefinitenessError, InputError, SingularMatrixError


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise InputError(f"{name} contains non-finite entries")
    return a


def hermitian_part(a):
    """Self-adjoint part (A + A*)/2."""
    a = _as_matrix(a)
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class EigenSystem:
    """Full spectrum of a Hermitian matrix, eigenvalues sorted descending.

    ``vectors[:, j]`` is the eigenvector for ``values[j]``; the columns are
    orthonormal.
    """

    values: np.ndarray
    vectors: np.ndarray


def eigh(a) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, descending eigenvalues.

    The input is symmetrized before factorization; a non-Hermitian input is
    therefore interpreted through its self-adjoint part.
    """
    a = hermitian_part(a)
    if a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    w, v = np.linalg.eigh(a)
    return EigenSystem(values=w[::-1].copy(), vectors=v[:, ::-1].copy())


def geneig_definite(a, b):
    """Solve A x = mu B x for Hermitian A and positive definite B.

    Returns ``(mu, x)`` with the generalized eigenvalues ascending and the
    eigenvector columns B-orthonormal.  Uses the Cholesky congruence
    B = L L*, reducing to the standard Hermitian problem for L^-1 A L^-*.
    """
    a = hermitian_part(a)
    b = hermitian_part(b)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch: {a.shape} vs {b.shape}")
    try:
        chol = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(
            "B is not positive definite to working precision"
        ) from exc
    y = sla.solve_triangular(chol, a, lower=True)
    w = sla.solve_triangular(chol, y.conj().T, lower=True).conj().T
    mu, v = np.linalg.eigh(hermitian_part(w))
    x = sla.solve_triangular(chol.conj().T, v, lower=False)
    return mu, x


def solve_dense(a, b):
    """Solve A x = b by LU with partial pivoting.

    Raises :class:`SingularMatrixError` (carrying the offending pivot
    magnitude) when the factorization is singular to working precision.
    """
    a = _as_matrix(a, "A")
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise InputError(f"A must be square, got shape {a.shape}")
    lu, piv = sla.lu_factor(a)
    diag = np.abs(np.diag(lu))
    pivot_floor = np.finfo(float).eps * max(diag.max(), 1e-300) * a.shape[0]
    if diag.min() <= pivot_floor:
        raise SingularMatrixError(
            f"matrix singular to working precision (pivot {diag.min():.3e})",
            pivot=float(diag.min()),
        )
    return sla.lu_solve((lu, piv), b)


def spectral_norm(a):
    """Largest singular value."""
    a = _as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def frobenius_norm(a):
    return float(np.linalg.norm(np.asarray(a)))

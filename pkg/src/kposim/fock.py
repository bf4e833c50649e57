"""Truncated Fock-space primitives.

Ladder operators, coherent states and the dense eigendecompositions that the
rest of the package builds on.  Everything works on plain complex ndarrays;
states are column vectors normalized to 1, operators are square matrices.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import ContractViolationError, InvalidDimensionError, TruncationWarning

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-6


def annihilation(dim: int) -> np.ndarray:
    """Bosonic annihilation operator on the first `dim` Fock levels."""
    if dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def creation(dim: int) -> np.ndarray:
    """Bosonic creation operator, adjoint of :func:`annihilation`."""
    return annihilation(dim).conj().T


def number_diagonal(dim: int) -> np.ndarray:
    """Diagonal of the number operator, i.e. [0, 1, ..., dim-1]."""
    if dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    return np.arange(dim, dtype=float)


def position(dim: int) -> np.ndarray:
    """The operator a + a^dagger (sqrt(2) times the q quadrature)."""
    a = annihilation(dim)
    return a + a.conj().T


def parity_diagonal(dim: int) -> np.ndarray:
    """Diagonal of the photon-number parity operator exp(i pi n)."""
    return (-1.0) ** np.arange(dim)


def coherent_state(alpha: complex, dim: int, warn_truncation: bool = True) -> np.ndarray:
    """Coherent state |alpha> truncated to `dim` levels and renormalized.

    Emits a TruncationWarning when |alpha|^2 > dim/4, the point where the
    Poisson tail starts to leak past the truncation.
    """
    if dim < 2:
        raise InvalidDimensionError(f"Fock truncation must be >= 2, got {dim}")
    if warn_truncation and abs(alpha) ** 2 > dim / 4:
        warnings.warn(
            f"coherent state with |alpha|^2 = {abs(alpha)**2:.3g} is truncation-unsafe "
            f"at dim = {dim} (limit dim/4 = {dim / 4:.3g})",
            TruncationWarning,
            stacklevel=2,
        )
    psi = np.zeros(dim, dtype=complex)
    if alpha == 0:
        psi[0] = 1.0
        return psi
    # c_n = alpha^n / sqrt(n!) * exp(-|alpha|^2/2), built by cumulative products
    # to avoid overflow in alpha^n and n! separately.
    psi[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        psi[n] = psi[n - 1] * alpha / np.sqrt(n)
    psi /= np.linalg.norm(psi)
    return psi


def fix_eigenvector_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.abs(pivots), 1.0)
    return vectors / phases[np.newaxis, :]


def hermitian_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and a unitary matrix of
    phase-fixed eigenvector columns.
    """
    residual = np.max(np.abs(matrix - matrix.conj().T))
    if residual >= HERMITICITY_TOL:
        raise ContractViolationError(
            f"matrix is not Hermitian: max |H - H^dag| = {residual:.3e}"
        )
    values, vectors = np.linalg.eigh(matrix)
    return values, fix_eigenvector_phases(vectors)


def unitary_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases and eigenvectors of a unitary matrix.

    Phases are reported in the canonical branch [0, 2*pi) and sorted
    ascending.  Uses a complex Schur decomposition, so the returned
    eigenvector matrix is unitary to machine precision even for
    (near-)degenerate eigenphases.
    """
    dim = matrix.shape[0]
    residual = np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim)))
    if residual >= UNITARITY_TOL:
        raise ContractViolationError(
            f"matrix is not unitary: max |U^dag U - I| = {residual:.3e}"
        )
    t, z = scipy.linalg.schur(matrix, output="complex")
    eigenvalues = np.diag(t)
    moduli = np.abs(eigenvalues)
    if np.max(np.abs(moduli - 1.0)) >= UNITARITY_TOL:
        raise ContractViolationError("eigenvalues deviate from unit modulus")
    phases = np.mod(np.angle(eigenvalues), 2 * np.pi)
    order = np.argsort(phases, kind="stable")
    return phases[order], fix_eigenvector_phases(z[:, order])


def expm_hermitian_times(matrix: np.ndarray, scalar: complex) -> np.ndarray:
    """exp(scalar * H) for Hermitian H, via eigendecomposition.

    Exactly unitary (up to roundoff) when `scalar` is purely imaginary.
    """
    values, vectors = hermitian_eig(matrix)
    return (vectors * np.exp(scalar * values)) @ vectors.conj().T

"""Matrix realizations of the oscillator Hamiltonians.

Three frames are provided: the lab frame with the sinusoidal drive, the
displaced rotating frame at half the drive frequency (the frame in which the
stroboscopic propagator is computed), and the second-order static effective
Kerr Hamiltonian.

All builders assemble operators on an enlarged space of ``dim + margin``
levels and crop back to ``dim`` so that the top of the truncated basis does
not contaminate the returned matrix elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ContractViolationError, InvalidDimensionError
from .fock import annihilation, hermitian_eig, number_diagonal, parity_diagonal
from .model import DerivedParams, ModelParams

FRAMES = ("lab", "rotating", "effective-static")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Frame choice, parameters and Fock truncation for a matrix build."""

    model: ModelParams
    derived: DerivedParams
    dim: int
    frame: str = "rotating"
    margin: int = 20

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ContractViolationError(f"unknown frame {self.frame!r}")
        if self.dim < 2:
            raise InvalidDimensionError(f"Fock truncation must be >= 2, got {self.dim}")
        if self.margin < 0:
            raise InvalidDimensionError("margin must be nonnegative")

    @property
    def dim_work(self) -> int:
        return self.dim + self.margin


@lru_cache(maxsize=8)
def _position_powers(dim: int, margin: int) -> tuple[np.ndarray, ...]:
    """Powers x^1..x^4 of x = a + a^dag, built on dim+margin levels, cropped."""
    work = dim + margin
    a = annihilation(work).real
    x = a + a.T
    x2 = x @ x
    x3 = x2 @ x
    x4 = x2 @ x2
    out = tuple(np.ascontiguousarray(m[:dim, :dim]) for m in (x, x2, x3, x4))
    for m in out:
        m.setflags(write=False)
    return out


def drive_phase_displacement(t: float, spec: HamiltonianSpec) -> float:
    """Scalar displacement term Pi e^{-i w_d t} + c.c. of the rotating frame."""
    return 2.0 * spec.derived.Pi * np.cos(spec.model.omega_d * t)


class RotatingFrameHamiltonian:
    """Fast evaluator for the rotating-frame Hamiltonian.

    The generator at time t is a rotation of a real, 9-band symmetric matrix:

        H(t) = R(theta) Htilde(c) R(theta)^dag,

    with R(theta) = exp(i theta n), theta = w_d t / 2, and the displacement
    scalar c = 2 Pi cos(w_d t).  Htilde(c) is polynomial in c with constant
    matrix coefficients, which this class precomputes; the propagator then
    needs only one small banded eigenproblem per time step.
    """

    bandwidth = 4

    def __init__(self, spec: HamiltonianSpec):
        self.spec = spec
        self.dim = spec.dim
        self.omega_d = spec.model.omega_d
        g3, g4 = spec.model.g3, spec.model.g4
        delta = spec.derived.delta
        x1, x2, x3, x4 = _position_powers(spec.dim, spec.margin)
        n_diag = np.diag(-delta * number_diagonal(spec.dim))
        # Htilde(c) = B0 + c B1 + c^2 B2 + c^3 B3 + scalar(c) * I
        self._coeff = (
            n_diag + (g3 / 3.0) * x3 + (g4 / 4.0) * x4,
            g3 * x2 + g4 * x3,
            g3 * x1 + 1.5 * g4 * x2,
            g4 * x1,
        )
        self._bands = tuple(self._lower_bands(b) for b in self._coeff)
        self._g3, self._g4 = g3, g4

    def _lower_bands(self, matrix: np.ndarray) -> np.ndarray:
        bands = np.zeros((self.bandwidth + 1, self.dim))
        for k in range(self.bandwidth + 1):
            bands[k, : self.dim - k] = np.diagonal(matrix, -k)
        return bands

    def displacement(self, t: float) -> float:
        return drive_phase_displacement(t, self.spec)

    def scalar(self, c: float) -> float:
        """c-number part of Htilde(c) (a global quasienergy offset)."""
        return (self._g3 / 3.0) * c**3 + (self._g4 / 4.0) * c**4

    def bands(self, c: float) -> np.ndarray:
        """Lower-band form of Htilde(c) without the scalar part."""
        return (
            self._bands[0]
            + c * (self._bands[1] + c * (self._bands[2] + c * self._bands[3]))
        )

    def tilde_dense(self, c: float, include_scalar: bool = True) -> np.ndarray:
        b0, b1, b2, b3 = self._coeff
        h = b0 + c * (b1 + c * (b2 + c * b3))
        if include_scalar:
            h = h + self.scalar(c) * np.eye(self.dim)
        return h

    def rotation_phases(self, t: float) -> np.ndarray:
        """Diagonal of R(theta) = exp(i w_d t/2 n)."""
        return np.exp(0.5j * self.omega_d * t * number_diagonal(self.dim))

    def dense(self, t: float) -> np.ndarray:
        """Full complex Hamiltonian matrix at time t."""
        r = self.rotation_phases(t)
        h = self.tilde_dense(self.displacement(t)).astype(complex)
        return (r[:, None] * h) * r.conj()[None, :]


def h_rotating(t: float, spec: HamiltonianSpec) -> np.ndarray:
    """Displaced rotating-frame Hamiltonian at time t (period 4 pi / w_d)."""
    if spec.frame != "rotating":
        raise ContractViolationError(f"spec frame is {spec.frame!r}, expected 'rotating'")
    return RotatingFrameHamiltonian(spec).dense(t)


def h_lab(t: float, spec: HamiltonianSpec) -> np.ndarray:
    """Lab-frame Hamiltonian with the sinusoidal charge drive at time t."""
    if spec.frame != "lab":
        raise ContractViolationError(f"spec frame is {spec.frame!r}, expected 'lab'")
    m, d = spec.model, spec.dim
    x1, x2, x3, x4 = _position_powers(spec.dim, spec.margin)
    work = spec.dim_work
    a = annihilation(work)
    drive = (-1j * m.Omega_d * np.cos(m.omega_d * t)) * (a - a.conj().T)[:d, :d]
    h = np.diag(m.omega0 * number_diagonal(d)).astype(complex)
    h += (m.g3 / 3.0) * x3 + (m.g4 / 4.0) * x4
    h += drive
    return h


def h_effective_static(spec: HamiltonianSpec) -> np.ndarray:
    """Second-order static effective Hamiltonian eps2 (a^dag2 + a^2) - K a^dag2 a^2.

    Matrix elements of the quadratic and the Kerr term are truncation-exact,
    so this builds directly at `dim`.  Commutes with photon-number parity.
    """
    d = spec.dim
    eps2, k = spec.derived.epsilon2, spec.derived.K
    n = number_diagonal(d)
    h = np.diag(-k * n * (n - 1.0)).astype(complex)
    m = np.arange(d - 2)
    two_photon = eps2 * np.sqrt((m + 1.0) * (m + 2.0))
    h[m, m + 2] += two_photon
    h[m + 2, m] += two_photon
    return h


def effective_eigensystem(spec: HamiltonianSpec) -> tuple[np.ndarray, np.ndarray]:
    """Excitation energies and eigenstates of the static effective Hamiltonian.

    The metapotential wells sit at the top of the spectrum of
    ``h_effective_static`` (the Kerr term is negative definite at large n), so
    excitation energies are measured downward from the largest eigenvalue:
    E'_j = (E_0 - E_j) / K >= 0, sorted ascending.  States are returned as
    matching columns.

    The parity blocks are diagonalized separately, so every returned state is
    parity-pure even where the well pairs are numerically degenerate (the
    quasi-degenerate pairs then come out as deterministic even/odd partners,
    even members first on exact ties).
    """
    h = h_effective_static(spec)
    dim = spec.dim
    energies = []
    states = []
    parities = []
    for offset in (0, 1):
        idx = np.arange(offset, dim, 2)
        values, vectors = hermitian_eig(h[np.ix_(idx, idx)])
        block = np.zeros((dim, idx.size), dtype=complex)
        block[idx, :] = vectors
        energies.append(values)
        states.append(block)
        parities.append(np.full(idx.size, offset))
    values = np.concatenate(energies)
    vectors = np.concatenate(states, axis=1)
    parity = np.concatenate(parities)
    e0 = values.max()
    excitations = (e0 - values) / spec.derived.K
    order = np.lexsort((parity, excitations))
    return excitations[order], vectors[:, order]


def effective_excitation_spectrum(spec: HamiltonianSpec, n_levels: int) -> np.ndarray:
    """First `n_levels` scaled excitation energies (E0 - E)/K, ascending."""
    if n_levels > spec.dim // 2:
        raise InvalidDimensionError(
            f"{n_levels} levels requested from a dim={spec.dim} truncation; "
            "levels beyond dim/2 are truncation-unsafe"
        )
    excitations, _ = effective_eigensystem(spec)
    return excitations[:n_levels]


def parity_expectations(states: np.ndarray) -> np.ndarray:
    """<exp(i pi n)> for each column state."""
    signs = parity_diagonal(states.shape[0])
    return np.real(np.einsum("n,nk->k", signs, np.abs(states) ** 2))

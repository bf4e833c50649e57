"""Stroboscopic propagator, Floquet modes and quasienergy scaling.

The propagator over tau = 4 pi / w_d (twice the drive period, where the
period-doubled response lives) is an ordered product of midpoint
piecewise-constant exponentials, each of which is exactly unitary.  Two
exact symmetries of the drive cut the work to a quarter period:

* half-period parity:  H(t + tau/2) = P H(t) P  with P the photon parity,
* quarter-period reflection:  H(tau/2 - t) = P conj(H(t)) P,

so U(tau) = P V P V with V = P W^T P W, where W is the product over the
first quarter of the steps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import ContractViolationError, IntegratorFailureError, ReferenceUndefinedError
from .fock import number_diagonal, parity_diagonal, unitary_eig
from .hamiltonians import HamiltonianSpec, RotatingFrameHamiltonian, parity_expectations

UNITARITY_FAIL = 1e-6


@dataclass(frozen=True)
class FloquetSpectrum:
    """Eigendata of the stroboscopic propagator.

    quasienergies are folded to the canonical branch [0, w_d/2); raw_phases
    keeps the unfolded eigenphases of U(tau) in [0, 2 pi).  `scaled` and
    `eps0_index` are filled by :func:`scale_quasienergies`.
    """

    omega_d: float
    quasienergies: np.ndarray
    raw_phases: np.ndarray
    modes: np.ndarray
    occupations: np.ndarray
    parity: np.ndarray
    steps_used: int
    scaled: np.ndarray | None = None
    eps0_index: int | None = None
    occupation_cap: float | None = None

    @property
    def tau(self) -> float:
        return 4.0 * np.pi / self.omega_d

    @property
    def branch(self) -> float:
        return 0.5 * self.omega_d

    @property
    def dim(self) -> int:
        return self.modes.shape[0]


def _parity_conjugate(matrix: np.ndarray, signs: np.ndarray) -> np.ndarray:
    return (signs[:, None] * matrix) * signs[None, :]


def propagator(
    spec: HamiltonianSpec,
    n_steps: int = 4096,
    use_symmetry: bool = True,
    check_unitarity: bool = True,
) -> np.ndarray:
    """Time-ordered stroboscopic propagator U(tau), tau = 4 pi / w_d.

    Each factor is exp(-i H(t_j + dt/2) dt), evaluated exactly through the
    rotation-conjugated banded eigenproblem of the rotating-frame generator.
    With `use_symmetry` (requires n_steps % 4 == 0) only a quarter of the
    factors are computed; the result equals the plain ordered product to
    machine precision.
    """
    if spec.frame != "rotating":
        raise ContractViolationError("propagator requires a rotating-frame spec")
    if n_steps < 256:
        raise ContractViolationError(f"n_steps = {n_steps} < 256 is below the supported floor")
    rh = RotatingFrameHamiltonian(spec)
    tau = 4.0 * np.pi / spec.model.omega_d
    dt = tau / n_steps

    if use_symmetry and n_steps % 4 == 0:
        quarter = _ordered_product(rh, dt, 0, n_steps // 4)
        signs = parity_diagonal(spec.dim)
        half = _parity_conjugate(quarter.T, signs) @ quarter
        u = _parity_conjugate(half, signs) @ half
    else:
        u = _ordered_product(rh, dt, 0, n_steps)

    if check_unitarity:
        residual = np.max(np.abs(u.conj().T @ u - np.eye(spec.dim)))
        if residual > UNITARITY_FAIL:
            raise IntegratorFailureError("propagator lost unitarity", residual)
    return u


def _ordered_product(rh: RotatingFrameHamiltonian, dt: float, j0: int, j1: int) -> np.ndarray:
    """Product of midpoint factors for steps j0 <= j < j1 (later steps leftmost)."""
    dim = rh.dim
    n_levels = number_diagonal(dim)
    u = np.eye(dim, dtype=complex)
    for j in range(j0, j1):
        t_mid = (j + 0.5) * dt
        c = rh.displacement(t_mid)
        w, v = scipy.linalg.eig_banded(rh.bands(c), lower=True)
        rot = np.exp((0.5j * rh.omega_d * t_mid) * n_levels)
        u *= rot.conj()[:, None]
        u = v @ (np.exp(-1j * dt * (w + rh.scalar(c)))[:, None] * (v.T @ u))
        u *= rot[:, None]
    return u


def floquet_spectrum(u: np.ndarray, omega_d: float, steps_used: int = 0) -> FloquetSpectrum:
    """Diagonalize U(tau) and fold the eigenphase rates into [0, w_d/2)."""
    phases, modes = unitary_eig(u)
    tau = 4.0 * np.pi / omega_d
    quasi = np.mod(phases / tau, 0.5 * omega_d)
    weights = np.abs(modes) ** 2
    occupations = number_diagonal(modes.shape[0]) @ weights
    return FloquetSpectrum(
        omega_d=omega_d,
        quasienergies=quasi,
        raw_phases=phases,
        modes=modes,
        occupations=occupations,
        parity=parity_expectations(modes),
        steps_used=steps_used,
    )


def occupation(mode: np.ndarray) -> float:
    """Photon-number expectation <a^dag a> of a normalized state."""
    return float(number_diagonal(mode.shape[0]) @ np.abs(mode) ** 2)


def reference_mode_index(
    spectrum: FloquetSpectrum,
    occupation_cap: float,
    ground_state: np.ndarray | None = None,
    tie_tol: float = 1e-6,
) -> int:
    """Index of the quasienergy reference mode (the well-bottom state).

    With `ground_state` given (the static-effective ground state), picks the
    mode with maximal overlap against it.  Otherwise falls back to the
    lowest-occupation mode below the cap -- note that at experimentally
    relevant couplings the hyperbolic-point state can have a *lower*
    occupation than the well-bottom cat state, so the overlap selector is
    the reliable default.  Occupation ties are broken toward the lower
    quasienergy in the canonical branch.
    """
    occupations = spectrum.occupations
    eligible = np.flatnonzero(occupations < occupation_cap)
    if eligible.size == 0:
        raise ReferenceUndefinedError(
            f"no Floquet mode with occupation below {occupation_cap}"
        )
    if ground_state is not None:
        overlaps = np.abs(spectrum.modes[:, eligible].conj().T @ ground_state) ** 2
        return int(eligible[np.argmax(overlaps)])
    occ_min = occupations[eligible].min()
    tied = eligible[occupations[eligible] <= occ_min + tie_tol]
    return int(tied[np.argmin(spectrum.quasienergies[tied])])


def _orient_reference(spectrum: FloquetSpectrum, idx: int, partner: int | None) -> int:
    """Pick the cat-pair member that folds its partner to a small positive eps~.

    The two well-bottom states are quasi-degenerate; anchoring on the upper
    member would alias the lower one to the top of the branch.
    """
    if partner is None or partner == idx:
        return idx
    branch = spectrum.branch
    if np.mod(spectrum.quasienergies[partner] - spectrum.quasienergies[idx], branch) < branch / 2:
        return idx
    return partner


def scale_quasienergies(
    spectrum: FloquetSpectrum,
    kerr: float,
    occupation_cap: float = 30.0,
    ground_state: np.ndarray | None = None,
    parity_partner: np.ndarray | None = None,
) -> FloquetSpectrum:
    """Scaled quasienergies eps~ = [(eps - eps0) mod (w_d/2)] / K.

    eps0 belongs to the mode at the bottom of the metapotential wells,
    selected per :func:`reference_mode_index`; when the odd-parity partner
    state is supplied the lower pair member is used so that its twin folds
    to +splitting instead of the top of the branch.
    """
    idx = reference_mode_index(spectrum, occupation_cap, ground_state)
    if parity_partner is not None:
        partner = reference_mode_index(spectrum, occupation_cap, parity_partner)
        idx = _orient_reference(spectrum, idx, partner)
    eps0 = spectrum.quasienergies[idx]
    scaled = np.mod(spectrum.quasienergies - eps0, spectrum.branch) / kerr
    return replace(spectrum, scaled=scaled, eps0_index=idx, occupation_cap=occupation_cap)


def compute_spectrum(
    spec: HamiltonianSpec,
    n_steps: int = 4096,
    occupation_cap: float = 30.0,
    use_symmetry: bool = True,
    reference: str = "effective-ground",
) -> FloquetSpectrum:
    """Propagate, diagonalize and scale in one call.

    reference "effective-ground" anchors eps0 on the mode closest to the
    static-effective ground state; "min-occupation" uses the bare
    lowest-occupation rule.
    """
    u = propagator(spec, n_steps=n_steps, use_symmetry=use_symmetry)
    spectrum = floquet_spectrum(u, spec.model.omega_d, steps_used=n_steps)
    ground = partner = None
    if reference == "effective-ground":
        from .hamiltonians import effective_eigensystem

        _, states = effective_eigensystem(spec)
        ground = states[:, 0]
        partner = states[:, 1]
    elif reference != "min-occupation":
        raise ContractViolationError(f"unknown reference rule {reference!r}")
    return scale_quasienergies(spectrum, spec.derived.K, occupation_cap, ground, partner)


def spectrum_records(spectrum: FloquetSpectrum) -> list[dict]:
    """Per-mode export records for serialization."""
    rows = []
    for k in range(spectrum.dim):
        rows.append(
            {
                "index": k,
                "quasienergy": float(spectrum.quasienergies[k]),
                "raw_phase": float(spectrum.raw_phases[k]),
                "scaled": None if spectrum.scaled is None else float(spectrum.scaled[k]),
                "occupation": float(spectrum.occupations[k]),
                "parity": float(spectrum.parity[k]),
            }
        )
    return rows

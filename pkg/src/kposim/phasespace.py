"""Husimi functions and localization measures.

Quadrature convention: alpha = (q + i p) / sqrt(2), so a coherent state
centered at (q0, p0) peaks at those quadrature values and the metapotential
wells sit at q = +/- sqrt(2 Gamma).  With this convention the Husimi density
Q(q, p) = |<alpha|psi>|^2 / pi integrates to 2 over dq dp (the resolution of
the identity carries dq dp / 2), and a coherent state has Husimi IPR
int Q^2 dq dp = 1/pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DomainTooSmallError, KposimError
from .fock import expm_hermitian_times, number_diagonal
from .floquet import FloquetSpectrum
from .hamiltonians import HamiltonianSpec, RotatingFrameHamiltonian, _position_powers

TOTAL_MASS = 2.0  # integral of Q over dq dp for any normalized state
HUSIMI_MAX = 1.0 / np.pi


@dataclass(frozen=True)
class HusimiField:
    """Husimi density sampled on a rectangular quadrature grid.

    values[i, j] = Q(q_grid[i], p_grid[j]).
    """

    q_grid: np.ndarray
    p_grid: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.q_grid[1] - self.q_grid[0]) * (self.p_grid[1] - self.p_grid[0]))

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def capture(self) -> float:
        """Fraction of the total Husimi mass inside the grid."""
        return self.mass() / TOTAL_MASS

    def ipr(self) -> float:
        return float(np.sum(self.values**2) * self.cell_area)


def default_grid(gamma: float, n_points: int = 201) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric quadrature grid covering both wells of a given Gamma.

    Extends to max(12, 2 sqrt(2 Gamma) + 4), at least ~10 cells per vacuum
    Gaussian width at the default resolution.
    """
    half = max(12.0, 2.0 * np.sqrt(2.0 * max(gamma, 0.0)) + 4.0)
    grid = np.linspace(-half, half, n_points)
    return grid, grid.copy()


def coherent_overlaps(state: np.ndarray, alpha_grid: np.ndarray) -> np.ndarray:
    """<alpha|psi> evaluated on an array of alpha values.

    Built by a cumulative recurrence in n to stay finite for |alpha|^2 up to
    several hundred.
    """
    dim = state.shape[0]
    abs2 = np.abs(alpha_grid) ** 2
    if np.max(abs2) > 1200.0:
        raise KposimError("grid reaches |alpha|^2 > 1200; coherent weights underflow")
    term = np.exp(-0.5 * abs2).astype(complex)
    acc = term * state[0]
    conj_alpha = np.conj(alpha_grid)
    for n in range(1, dim):
        term = term * conj_alpha / np.sqrt(n)
        if state[n] != 0:
            acc += term * state[n]
    return acc


def husimi(
    state: np.ndarray,
    q_grid: np.ndarray,
    p_grid: np.ndarray,
    min_capture: float = 0.99,
) -> HusimiField:
    """Husimi density Q(q, p) = |<alpha|psi>|^2 / pi on the given grid.

    Raises DomainTooSmallError when the grid captures less than
    `min_capture` of the state's mass.
    """
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-8:
        raise ContractViolationError(f"state norm {norm:.6f} != 1")
    alpha = (q_grid[:, None] + 1j * p_grid[None, :]) / np.sqrt(2.0)
    values = np.abs(coherent_overlaps(state, alpha)) ** 2 / np.pi
    field = HusimiField(q_grid=q_grid, p_grid=p_grid, values=values)
    if np.max(values) > HUSIMI_MAX * (1.0 + 1e-10):
        raise ContractViolationError("Husimi density exceeds the coherent-state bound 1/pi")
    if field.capture() < min_capture:
        raise DomainTooSmallError(
            f"grid captures only {100 * field.capture():.2f}% of the Husimi mass"
        )
    return field


def husimi_ipr(
    state: np.ndarray,
    q_grid: np.ndarray,
    p_grid: np.ndarray,
    min_capture: float = 0.99,
) -> float:
    """Phase-space IPR, the integral of Q^2 over dq dp."""
    return husimi(state, q_grid, p_grid, min_capture).ipr()


def leading_order_generator(spec: HamiltonianSpec, n_samples: int = 64) -> np.ndarray:
    """First-order canonical-transformation generator S1 at t = 0.

    Zero-mean time antiderivative of the oscillating part of the cubic term
    of the rotating-frame Hamiltonian, extracted from a discrete Fourier
    transform over one stroboscopic period.
    """
    rh = RotatingFrameHamiltonian(spec)
    omega_d = spec.model.omega_d
    tau = 4.0 * np.pi / omega_d
    g3 = spec.model.g3
    dim = spec.dim
    samples = np.empty((n_samples, dim, dim), dtype=complex)
    levels = number_diagonal(dim)
    p1, p2, p3, _ = _position_powers(spec.dim, spec.margin)
    for ell in range(n_samples):
        t = ell * tau / n_samples
        c = rh.displacement(t)
        cubic = (g3 / 3.0) * (p3 + 3.0 * c * p2 + 3.0 * c**2 * p1 + c**3 * np.eye(dim))
        rot = np.exp(0.5j * omega_d * t * levels)
        samples[ell] = (rot[:, None] * cubic) * rot.conj()[None, :]
    coeffs = np.fft.ifft(samples, axis=0)
    s1 = np.zeros((dim, dim), dtype=complex)
    for k in range(1, n_samples // 2):
        s1 += (2j / (k * omega_d)) * coeffs[k]
        s1 += (2j / (-k * omega_d)) * coeffs[n_samples - k]
    return s1


def origin_packet(spec: HamiltonianSpec, us_order: int = 0) -> np.ndarray:
    """Coherent packet at the phase-space origin, optionally frame-dressed.

    us_order 0 returns the bare vacuum |G(0,0)> = |0>; us_order 1 applies
    exp(-i S1) with S1 the leading-order generator of the static effective
    frame.
    """
    if us_order not in (0, 1):
        raise ContractViolationError(f"unsupported dressing order {us_order}")
    packet = np.zeros(spec.dim, dtype=complex)
    packet[0] = 1.0
    if us_order == 1:
        s1 = leading_order_generator(spec)
        packet = expm_hermitian_times(s1, -1j) @ packet
        packet /= np.linalg.norm(packet)
    return packet


def floquet_basis_ipr(packet: np.ndarray, spectrum: FloquetSpectrum) -> float:
    """IPR of a packet expanded in the Floquet modes: sum_j |<phi_j|packet>|^4."""
    overlaps = spectrum.modes.conj().T @ packet
    return float(np.sum(np.abs(overlaps) ** 4))


def coherent_state_ipr(
    spec: HamiltonianSpec, spectrum: FloquetSpectrum, us_order: int = 0
) -> float:
    """I_G: Floquet-basis IPR of the (dressed) origin packet."""
    return floquet_basis_ipr(origin_packet(spec, us_order), spectrum)


def save_field(field: HusimiField, path) -> None:
    """Write a HusimiField as a header line plus row-major values."""
    with open(path, "w") as fh:
        fh.write(
            "# q_min q_max p_min p_max nq np\n# %r %r %r %r %d %d\n"
            % (
                float(field.q_grid[0]),
                float(field.q_grid[-1]),
                float(field.p_grid[0]),
                float(field.p_grid[-1]),
                field.q_grid.size,
                field.p_grid.size,
            )
        )
        for row in field.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_field(path) -> HusimiField:
    """Read a HusimiField written by :func:`save_field`."""
    with open(path) as fh:
        fh.readline()
        parts = fh.readline().lstrip("# ").split()
        qmin, qmax, pmin, pmax = (float(x) for x in parts[:4])
        nq, npts = int(parts[4]), int(parts[5])
        values = np.loadtxt(fh, delimiter=",").reshape(nq, npts)
    return HusimiField(
        q_grid=np.linspace(qmin, qmax, nq),
        p_grid=np.linspace(pmin, pmax, npts),
        values=values,
    )

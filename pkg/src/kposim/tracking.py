"""Spectral-kissing detection and cat-state line tracing across Gamma.

Two tracing schemes are provided: following the mode with the largest
overlap against the previous step's mode, and re-selecting at each Gamma
against a fixed eigenstate of the static effective Hamiltonian.  The
combined scheme (overlap continuation with periodic re-anchoring) is what
the sweep front-end uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KposimError
from .floquet import FloquetSpectrum, compute_spectrum
from .hamiltonians import HamiltonianSpec, effective_eigensystem
from .model import build_params

#: overlap below which an ESQPT state is considered absent (chaos regime)
ESQPT_OVERLAP_FLOOR = 0.05
#: overlap below which a traced line counts as lost
TRACE_LOST_OVERLAP = 0.5


@dataclass(frozen=True)
class EsqptState:
    """Floquet mode with maximal overlap against the origin packet."""

    index: int
    overlap: float
    found: bool


def find_esqpt_state(spectrum: FloquetSpectrum, packet: np.ndarray) -> EsqptState:
    """Mode maximizing |<phi_j|packet>|^2; flagged absent below the floor."""
    overlaps = np.abs(spectrum.modes.conj().T @ packet) ** 2
    idx = int(np.argmax(overlaps))
    best = float(overlaps[idx])
    return EsqptState(index=idx, overlap=best, found=best >= ESQPT_OVERLAP_FLOOR)


class EmptyWindowError(KposimError):
    """No Floquet mode satisfies the tracing constraints."""

    def __init__(self, gamma: float, center: float, halfwidth: float, cap: float):
        super().__init__(
            f"no mode at Gamma={gamma:g} inside scaled-energy window "
            f"{center:g} +/- {halfwidth:g} with occupation < {cap:g}"
        )
        self.gamma = gamma
        self.center = center
        self.halfwidth = halfwidth
        self.cap = cap


@dataclass(frozen=True)
class KissingReport:
    """Pair statistics of the quasi-degenerate levels below the ESQPT."""

    gamma: float
    pair_count: int
    below_esqpt_count: int
    cat_state_count: int
    esqpt_scaled_energy: float
    esqpt_mode_index: int
    esqpt_overlap: float
    extrapolated: bool
    degenerate_by_construction: bool


def detect_kissing(
    spectrum: FloquetSpectrum,
    gamma: float,
    pair_tol: float = 1e-2,
    packet: np.ndarray | None = None,
) -> KissingReport:
    """Count quasi-degenerate level pairs below the ESQPT energy.

    Levels enter with occupation below the spectrum's occupation cap.  The
    ESQPT reference is the maximal-overlap mode against `packet` (vacuum by
    default); when that mode is absent the quadratic estimate Gamma^2 is used
    and the report is flagged as extrapolated.

    pair_count scans the sorted scaled energies below the reference and
    greedily pairs adjacent levels closer than `pair_tol` (in K units);
    cat_state_count = 2 * pair_count counts each quasi-degenerate pair as
    two cat states.
    """
    if spectrum.scaled is None:
        raise KposimError("spectrum has no scaled quasienergies; call scale_quasienergies")
    cap = spectrum.occupation_cap if spectrum.occupation_cap is not None else np.inf
    if packet is None:
        packet = np.zeros(spectrum.dim, dtype=complex)
        packet[0] = 1.0
    esqpt = find_esqpt_state(spectrum, packet)
    if esqpt.found:
        esqpt_energy = float(spectrum.scaled[esqpt.index])
        extrapolated = False
    else:
        esqpt_energy = float(gamma) ** 2
        extrapolated = True

    eligible = np.flatnonzero(spectrum.occupations < cap)
    below = np.sort(spectrum.scaled[eligible[spectrum.scaled[eligible] < esqpt_energy]])
    pair_count = 0
    i = 0
    while i + 1 < below.size:
        if below[i + 1] - below[i] < pair_tol:
            pair_count += 1
            i += 2
        else:
            i += 1
    return KissingReport(
        gamma=gamma,
        pair_count=pair_count,
        below_esqpt_count=int(below.size),
        cat_state_count=2 * pair_count,
        esqpt_scaled_energy=esqpt_energy,
        esqpt_mode_index=esqpt.index,
        esqpt_overlap=esqpt.overlap,
        extrapolated=extrapolated,
        degenerate_by_construction=(gamma == 0.0),
    )


@dataclass(frozen=True)
class TraceConstraints:
    """Search window for line tracing.

    When `energy_window` is given it is a fixed (lo, hi) interval of scaled
    quasienergies; otherwise the window floats, centered on the anchor
    prediction with halfwidth `energy_halfwidth` (K units).
    """

    energy_halfwidth: float = 5.0
    occupation_cap: float = 30.0
    energy_window: tuple[float, float] | None = None

    def window_at(self, center: float) -> tuple[float, float]:
        if self.energy_window is not None:
            return self.energy_window
        return (center - self.energy_halfwidth, center + self.energy_halfwidth)


@dataclass(frozen=True)
class GammaPoint:
    """Everything the tracers need at one value of Gamma."""

    gamma: float
    spec: HamiltonianSpec
    spectrum: FloquetSpectrum
    eff_energies: np.ndarray
    eff_states: np.ndarray


class GammaSweepProvider:
    """Builds Floquet spectra and effective eigensystems along a Gamma sweep."""

    def __init__(
        self,
        g3: float,
        g4: float,
        dim: int = 200,
        n_steps: int = 4096,
        occupation_cap: float = 30.0,
        omega_d: float | str = "auto",
        omega0: float = 1.0,
        margin: int = 20,
    ):
        self.g3, self.g4 = g3, g4
        self.dim = dim
        self.n_steps = n_steps
        self.occupation_cap = occupation_cap
        self.omega_d = omega_d
        self.omega0 = omega0
        self.margin = margin

    def spec_at(self, gamma: float) -> HamiltonianSpec:
        params, derived = build_params(
            self.g3, self.g4, gamma=gamma, omega_d=self.omega_d, omega0=self.omega0
        )
        return HamiltonianSpec(
            model=params, derived=derived, dim=self.dim, frame="rotating", margin=self.margin
        )

    def __call__(self, gamma: float) -> GammaPoint:
        spec = self.spec_at(gamma)
        spectrum = compute_spectrum(spec, self.n_steps, self.occupation_cap)
        energies, states = effective_eigensystem(spec)
        return GammaPoint(
            gamma=gamma, spec=spec, spectrum=spectrum,
            eff_energies=energies, eff_states=states,
        )


def select_mode(
    point: GammaPoint,
    reference: np.ndarray,
    center: float,
    constraints: TraceConstraints,
) -> tuple[int, float]:
    """Constraint-satisfying mode with maximal overlap against `reference`."""
    lo, hi = constraints.window_at(center)
    scaled = point.spectrum.scaled
    mask = (
        (scaled >= lo)
        & (scaled <= hi)
        & (point.spectrum.occupations < constraints.occupation_cap)
    )
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        raise EmptyWindowError(point.gamma, center, 0.5 * (hi - lo), constraints.occupation_cap)
    overlaps = np.abs(point.spectrum.modes[:, candidates].conj().T @ reference) ** 2
    best = int(np.argmax(overlaps))
    return int(candidates[best]), float(overlaps[best])


@dataclass
class TracedLine:
    """One cat-state line followed across the Gamma grid."""

    anchor: str
    gamma_values: list[float] = field(default_factory=list)
    mode_indices: list[int] = field(default_factory=list)
    scaled_energies: list[float] = field(default_factory=list)
    occupations: list[float] = field(default_factory=list)
    overlaps: list[float] = field(default_factory=list)
    status: list[str] = field(default_factory=list)
    ipr_values: list[float] = field(default_factory=list)

    def append(self, gamma, index, energy, occupation, overlap, status, ipr=np.nan):
        self.gamma_values.append(float(gamma))
        self.mode_indices.append(int(index))
        self.scaled_energies.append(float(energy))
        self.occupations.append(float(occupation))
        self.overlaps.append(float(overlap))
        self.status.append(status)
        self.ipr_values.append(float(ipr))

    @property
    def lost_from(self) -> float | None:
        for g, s in zip(self.gamma_values, self.status):
            if s == "lost":
                return g
        return None


class _LineState:
    """Mutable bookkeeping for one line during a sweep."""

    def __init__(self, anchor_index: int, label: str):
        self.anchor_index = anchor_index
        self.line = TracedLine(anchor=label)
        self.previous_mode: np.ndarray | None = None
        self.previous_energy: float | None = None
        self.previous_anchor_energy: float | None = None
        self.alive = True


def _advance_line(
    state: _LineState,
    point: GammaPoint,
    constraints: TraceConstraints,
    use_anchor_reference: bool,
) -> int | None:
    """Select this line's mode at one Gamma point and record it.

    The search window rides on the previous point's scaled energy advanced by
    the *local slope* of the effective anchor level: the absolute offset
    between the Floquet line and the effective prediction grows with
    excitation, but their slopes stay close, so this keeps the window on the
    line without widening it.
    """
    anchor_energy = float(point.eff_energies[state.anchor_index])
    if state.previous_energy is None:
        center = anchor_energy
    else:
        drift = anchor_energy - (state.previous_anchor_energy or anchor_energy)
        center = state.previous_energy + drift
    anchor_vec = point.eff_states[:, state.anchor_index]
    if use_anchor_reference or state.previous_mode is None:
        reference = anchor_vec
    else:
        reference = state.previous_mode
    try:
        idx, overlap = select_mode(point, reference, center, constraints)
    except EmptyWindowError:
        state.alive = False
        state.line.append(point.gamma, -1, np.nan, np.nan, 0.0, "lost")
        return None
    status = "ok" if overlap >= TRACE_LOST_OVERLAP else "lost"
    state.line.append(
        point.gamma,
        idx,
        point.spectrum.scaled[idx],
        point.spectrum.occupations[idx],
        overlap,
        status,
    )
    state.previous_mode = point.spectrum.modes[:, idx]
    state.previous_energy = float(point.spectrum.scaled[idx])
    state.previous_anchor_energy = anchor_energy
    return idx


def trace_lines(
    provider,
    anchor_indices: list[int],
    gamma_grid: np.ndarray,
    constraints: TraceConstraints | None = None,
    scheme: str = "combined",
    reanchor_every: int = 10,
    on_point=None,
) -> list[TracedLine]:
    """Follow several effective-state anchors across an ascending Gamma grid.

    scheme "overlap" continues each line from the previous step's mode,
    "anchor" re-selects against the Gamma-local effective eigenstate at every
    step, and "combined" is overlap continuation with re-anchoring every
    `reanchor_every` steps.  A per-point callback `on_point(point, selections)`
    receives each computed GammaPoint (for IPRs, exports, ...).
    """
    if scheme not in ("overlap", "anchor", "combined"):
        raise KposimError(f"unknown tracing scheme {scheme!r}")
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    if gamma_grid.size == 0 or np.any(np.diff(gamma_grid) <= 0):
        raise KposimError("gamma grid must be ascending and nonempty")
    constraints = constraints or TraceConstraints()
    states = [_LineState(a, f"effective-{a}") for a in anchor_indices]
    for step, gamma in enumerate(gamma_grid):
        point = provider(float(gamma))
        reanchor = scheme == "anchor" or (
            scheme == "combined" and reanchor_every > 0 and step % reanchor_every == 0
        )
        selections = {}
        for state in states:
            if not state.alive:
                continue
            idx = _advance_line(state, point, constraints, reanchor)
            if idx is not None:
                selections[state.anchor_index] = idx
        if on_point is not None:
            on_point(point, selections)
    return [s.line for s in states]


def trace_line_overlap(
    provider,
    anchor_index: int,
    gamma_grid: np.ndarray,
    constraints: TraceConstraints | None = None,
) -> TracedLine:
    """Scheme 1: follow the largest overlap with the previous step's mode."""
    return trace_lines(provider, [anchor_index], gamma_grid, constraints, scheme="overlap")[0]


def trace_line_anchor(
    provider,
    anchor_index: int,
    gamma_grid: np.ndarray,
    constraints: TraceConstraints | None = None,
) -> TracedLine:
    """Scheme 2: re-select against the local effective eigenstate at each Gamma."""
    return trace_lines(provider, [anchor_index], gamma_grid, constraints, scheme="anchor")[0]

"""Parameter algebra for the squeeze-driven Kerr oscillator.

Raw device parameters are the bare frequency, the third- and fourth-rank
nonlinearities and the drive; the derived constants are the Kerr coefficient
K, the squeezing amplitude, the displacement amplitude and the dimensionless
control parameter Gamma.  All frequencies are fractions of omega0 unless an
explicit omega0 is supplied.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ConvergenceError,
    NoSolutionError,
    ParamFileError,
    UnsupportedRegimeError,
)

# Control-parameter value where local chaos at the unstable point merges with
# chaos around the double well:  Gamma * K / omega0 = CHAOS_BOUNDARY_CONSTANT.
CHAOS_BOUNDARY_CONSTANT = 0.03347

# The classical double-well Hamiltonian hard-codes the nonlinearity ratio
# g4 = (20/69) g3^2 / omega0, which also makes K = 10 g4 exact.
COMPANION_G4_OVER_G3SQ = 20.0 / 69.0


@dataclass(frozen=True)
class ModelParams:
    """Raw device parameters (frequencies in units of omega0 by default)."""

    g3: float
    g4: float
    Omega_d: float
    omega_d: float
    omega0: float = 1.0

    def __post_init__(self):
        if self.omega_d <= 0:
            raise UnsupportedRegimeError(f"omega_d must be positive, got {self.omega_d}")
        if self.omega_d == self.omega0:
            raise UnsupportedRegimeError("omega_d = omega0 puts the drive on the linear resonance")
        for name in ("g3", "g4"):
            value = getattr(self, name)
            if abs(value) > 0.1 * self.omega0:
                warnings.warn(
                    f"{name} = {value:.3g} is not small compared with omega0; "
                    "the second-order derived constants are unreliable",
                    stacklevel=3,
                )


@dataclass(frozen=True)
class DerivedParams:
    """Second-order derived constants of the model."""

    K: float
    epsilon2: float
    Pi: float
    Gamma: float
    omega_a: float
    delta: float
    kappa: float


def kerr_coefficient(g3: float, g4: float, omega0: float = 1.0) -> float:
    """Leading-order Kerr nonlinearity K = -3 g4 / 2 + 10 g3^2 / (3 omega0)."""
    return -1.5 * g4 + 10.0 * g3**2 / (3.0 * omega0)


def shifted_frequency(g3: float, g4: float, Omega_d: float, omega0: float = 1.0) -> float:
    """Oscillator frequency including the Lamb and the drive-induced Stark shift."""
    lamb = 3.0 * g4 - 20.0 * g3**2 / (3.0 * omega0)
    stark = (6.0 * g4 + 9.0 * g3**2 / omega0) * (2.0 * Omega_d / (3.0 * omega0)) ** 2
    return omega0 + lamb + stark


def displacement_amplitude(Omega_d: float, omega_d: float, omega0: float = 1.0) -> float:
    """Exact linear-response displacement Pi = Omega_d omega_d / (omega_d^2 - omega0^2).

    This is the convention consistent with the chaos-boundary constant; see
    :func:`displacement_amplitude_resonant_approx` for the rougher form.
    """
    return Omega_d * omega_d / (omega_d**2 - omega0**2)


def displacement_amplitude_resonant_approx(Omega_d: float, omega_d: float) -> float:
    """Near-resonance approximation Pi ~ 2 Omega_d / (3 omega_d)."""
    return 2.0 * Omega_d / (3.0 * omega_d)


def derive(params: ModelParams) -> DerivedParams:
    """Compute the derived constants from raw device parameters.

    Raises UnsupportedRegimeError when K <= 0, where the control parameter
    Gamma = epsilon2 / K is undefined.
    """
    k = kerr_coefficient(params.g3, params.g4, params.omega0)
    if k <= 0:
        raise UnsupportedRegimeError(
            f"K = {k:.3g} <= 0: control parameter Gamma undefined in this regime"
        )
    epsilon2 = 2.0 * params.g3 * params.Omega_d / (3.0 * params.omega0)
    return DerivedParams(
        K=k,
        epsilon2=epsilon2,
        Pi=displacement_amplitude(params.Omega_d, params.omega_d, params.omega0),
        Gamma=epsilon2 / k,
        omega_a=shifted_frequency(params.g3, params.g4, params.Omega_d, params.omega0),
        delta=params.omega_d / 2.0 - params.omega0,
        kappa=k / params.omega0,
    )


def drive_for_gamma(gamma_target: float, g3: float, g4: float, omega0: float = 1.0) -> float:
    """Invert Gamma = epsilon2 / K for the drive amplitude.

    Exact because K does not depend on Omega_d at this order.
    """
    if g3 == 0:
        raise NoSolutionError("g3 = 0: no drive amplitude reproduces a nonzero Gamma")
    k = kerr_coefficient(g3, g4, omega0)
    if k <= 0:
        raise UnsupportedRegimeError(f"K = {k:.3g} <= 0")
    return 3.0 * omega0 * k * gamma_target / (2.0 * g3)


def chaos_boundary_gamma(kappa: float) -> float:
    """Gamma on the chaos-boundary line for a given kappa = K/omega0."""
    if kappa <= 0:
        raise UnsupportedRegimeError(f"kappa must be positive, got {kappa}")
    return CHAOS_BOUNDARY_CONSTANT / kappa


def chaos_boundary_product(params: ModelParams) -> float:
    """Symbolic form of the boundary product Gamma * K / omega0.

    Evaluates g3 Omega_d omega_d / (omega0 (omega_d^2 - omega0^2)), which at
    omega_d = 2 omega0 reduces to epsilon2 / omega0.
    """
    return (
        params.g3
        * params.Omega_d
        * params.omega_d
        / (params.omega0 * (params.omega_d**2 - params.omega0**2))
    )


def resonant_drive_frequency(
    g3: float,
    g4: float,
    Omega_d: float,
    omega0: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> float:
    """Drive frequency for period doubling, omega_d = 2 omega_a.

    Iterated as a fixed point of the Stark-shifted frequency; with the
    second-order shift the map is constant in omega_d, so this converges
    immediately, but the loop guards any future amplitude feedback.
    """
    omega_d = 2.0 * omega0
    for _ in range(max_iter):
        new = 2.0 * shifted_frequency(g3, g4, Omega_d, omega0)
        if abs(new - omega_d) <= tol * abs(new):
            return new
        omega_d = new
    raise ConvergenceError("resonant drive frequency did not converge")


def nonlinearities_for_kappa(kappa: float, omega0: float = 1.0) -> tuple[float, float]:
    """(g3, g4) reproducing a target kappa with the companion nonlinearity ratio.

    Uses g4 = (20/69) g3^2 / omega0, the ratio embedded in the classical
    double-well coefficients; then K = 10 g4 = kappa * omega0 exactly.
    """
    if kappa <= 0:
        raise UnsupportedRegimeError(f"kappa must be positive, got {kappa}")
    g3 = omega0 * (69.0 * kappa / 200.0) ** 0.5
    g4 = COMPANION_G4_OVER_G3SQ * g3**2 / omega0
    return g3, g4


def build_params(
    g3: float,
    g4: float,
    *,
    gamma: float | None = None,
    Omega_d: float | None = None,
    omega_d: float | str = "auto",
    omega0: float = 1.0,
) -> tuple[ModelParams, DerivedParams]:
    """Resolve a full parameter set from either Gamma or Omega_d.

    omega_d="auto" selects the period-doubling resonance 2 omega_a.
    """
    if (gamma is None) == (Omega_d is None):
        raise ParamFileError("exactly one of Gamma and Omega_d must be given")
    if Omega_d is None:
        Omega_d = drive_for_gamma(gamma, g3, g4, omega0)
    if omega_d == "auto":
        omega_d = resonant_drive_frequency(g3, g4, Omega_d, omega0)
    params = ModelParams(g3=g3, g4=g4, Omega_d=Omega_d, omega_d=float(omega_d), omega0=omega0)
    return params, derive(params)


_PARAM_KEYS = {"omega0", "g3", "g4", "omega_d", "Omega_d", "Gamma"}


def load_params(source: str | Path | dict) -> tuple[ModelParams, DerivedParams]:
    """Parse a flat key-value parameter document (JSON object).

    Accepted keys: omega0, g3, g4, omega_d ("auto" allowed) and exactly one
    of Omega_d / Gamma.  Unknown keys are rejected.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ParamFileError("parameter document must be a flat JSON object")
    unknown = set(data) - _PARAM_KEYS
    if unknown:
        raise ParamFileError(f"unknown parameter keys: {sorted(unknown)}")
    for key in ("g3", "g4"):
        if key not in data:
            raise ParamFileError(f"missing required key: {key}")
    omega_d = data.get("omega_d", "auto")
    if omega_d != "auto":
        omega_d = float(omega_d)
    try:
        return build_params(
            float(data["g3"]),
            float(data["g4"]),
            gamma=None if "Gamma" not in data else float(data["Gamma"]),
            Omega_d=None if "Omega_d" not in data else float(data["Omega_d"]),
            omega_d=omega_d,
            omega0=float(data.get("omega0", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParamFileError):
            raise
        raise ParamFileError(f"malformed parameter value: {exc}") from exc

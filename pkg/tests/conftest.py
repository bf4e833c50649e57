import numpy as np
import pytest

from kposim import floquet, model
from kposim.hamiltonians import HamiltonianSpec

REF_G3 = 0.01695
REF_G4 = 8.33e-5


def reference_spec(gamma, dim=200, margin=20, omega_d="auto"):
    params, derived = model.build_params(REF_G3, REF_G4, gamma=gamma, omega_d=omega_d)
    return HamiltonianSpec(model=params, derived=derived, dim=dim, margin=margin)


@pytest.fixture(scope="session")
def fig1_gamma5():
    """Floquet spectrum at the reference couplings, Gamma = 5, dim 200 (shared)."""
    spec = reference_spec(5.0)
    return spec, floquet.compute_spectrum(spec, n_steps=4096)


@pytest.fixture(scope="session")
def fig1_gamma20():
    """Floquet spectrum at the reference couplings, Gamma = 20, dim 200 (shared)."""
    spec = reference_spec(20.0)
    return spec, floquet.compute_spectrum(spec, n_steps=4096)

import numpy as np
import pytest

from kposim import floquet, model
from kposim.errors import ContractViolationError, ReferenceUndefinedError
from kposim.fock import expm_hermitian_times
from kposim.hamiltonians import HamiltonianSpec, effective_eigensystem, h_rotating

from conftest import REF_G3, REF_G4, reference_spec


def linear_spec(dim=16, delta=-0.05):
    omega_d = 2.0 * (1.0 + delta)
    params = model.ModelParams(g3=0.0, g4=0.0, Omega_d=0.0, omega_d=omega_d)
    derived = model.DerivedParams(
        K=1.0, epsilon2=0.0, Pi=0.0, Gamma=0.0, omega_a=1.0, delta=delta, kappa=1.0
    )
    return HamiltonianSpec(model=params, derived=derived, dim=dim, frame="rotating")


def test_propagator_linear_oscillator_analytic():
    spec = linear_spec()
    u = floquet.propagator(spec, n_steps=256, use_symmetry=True)
    tau = 4 * np.pi / spec.model.omega_d
    want = np.diag(np.exp(1j * spec.derived.delta * tau * np.arange(16)))
    assert np.max(np.abs(u - want)) < 1e-10
    sp = floquet.floquet_spectrum(u, spec.model.omega_d)
    # eigenphase-rate branch: eps_k = (theta_k / tau) mod (w_d / 2)
    want_eps = np.sort(np.mod(spec.derived.delta * np.arange(16), 0.5 * spec.model.omega_d))
    assert np.allclose(np.sort(sp.quasienergies), want_eps, atol=1e-12)


def test_propagator_identity_spectrum():
    spec = linear_spec(delta=0.0)
    u = floquet.propagator(spec, n_steps=256)
    sp = floquet.floquet_spectrum(u, spec.model.omega_d)
    circular = np.minimum(sp.quasienergies, sp.branch - sp.quasienergies)
    assert np.allclose(circular, 0.0, atol=1e-12)


def test_propagator_matches_naive_product():
    spec = reference_spec(20.0, dim=40, margin=10)
    fast = floquet.propagator(spec, n_steps=512, use_symmetry=True)
    slow = floquet.propagator(spec, n_steps=512, use_symmetry=False)
    assert np.max(np.abs(fast - slow)) < 1e-12


def test_propagator_matches_dense_expm_reference():
    spec = reference_spec(5.0, dim=24, margin=8)
    n = 256
    tau = 4 * np.pi / spec.model.omega_d
    dt = tau / n
    u_ref = np.eye(24, dtype=complex)
    for j in range(n):
        h = h_rotating((j + 0.5) * dt, spec)
        u_ref = expm_hermitian_times(h, -1j * dt) @ u_ref
    u = floquet.propagator(spec, n_steps=n)
    assert np.max(np.abs(u - u_ref)) < 1e-10


def test_propagator_unitarity_fig1():
    spec = reference_spec(20.0, dim=120, margin=16)
    u = floquet.propagator(spec, n_steps=1024)
    assert np.max(np.abs(u.conj().T @ u - np.eye(120))) < 1e-8


def test_propagator_rejects_too_few_steps():
    with pytest.raises(ContractViolationError):
        floquet.propagator(linear_spec(), n_steps=128)


def test_propagator_rejects_wrong_frame():
    spec = reference_spec(5.0, dim=20)
    lab = HamiltonianSpec(model=spec.model, derived=spec.derived, dim=20, frame="lab")
    with pytest.raises(ContractViolationError):
        floquet.propagator(lab)


def quasienergy_errors(spec, steps_list, reference_steps):
    ref = floquet.propagator(spec, n_steps=reference_steps)
    ref_phases = np.sort(np.angle(np.linalg.eigvals(ref)))
    errors = []
    for n in steps_list:
        u = floquet.propagator(spec, n_steps=n)
        phases = np.sort(np.angle(np.linalg.eigvals(u)))
        errors.append(np.max(np.abs(phases - ref_phases)))
    return errors


def test_second_order_convergence():
    spec = reference_spec(5.0, dim=30, margin=8)
    e1, e2 = quasienergy_errors(spec, [512, 1024], 16384)
    ratio = e1 / e2
    assert 3.2 < ratio < 4.8


def test_occupation_values():
    vac = np.zeros(40, dtype=complex)
    vac[0] = 1.0
    assert floquet.occupation(vac) == 0.0
    from kposim.fock import coherent_state

    psi = coherent_state(np.sqrt(2.0), 40)
    assert floquet.occupation(psi) == pytest.approx(2.0, abs=1e-8)


def test_reference_fmin_is_cat_state(fig1_gamma20):
    spec, sp = fig1_gamma20
    # the reference mode sits at the well bottom: occupation ~ Gamma
    occ = sp.occupations[sp.eps0_index]
    assert occ == pytest.approx(20.0, rel=0.25)
    assert sp.scaled[sp.eps0_index] == 0.0
    # its quasi-degenerate parity partner folds to a small positive value
    partner = np.argsort(sp.scaled)[1]
    assert sp.scaled[partner] < 1.0


def test_scaled_quasienergies_match_effective_low_levels(fig1_gamma5):
    spec, sp = fig1_gamma5
    exc, vecs = effective_eigensystem(spec)
    overlaps = np.abs(sp.modes.conj().T @ vecs[:, :4]) ** 2
    got = [sp.scaled[int(np.argmax(overlaps[:, j]))] for j in range(4)]
    # second-order effective theory tracks the Floquet spectrum to ~1 K here
    assert np.allclose(got, exc[:4], atol=1.5)


def test_gauge_shift_invariance(fig1_gamma5):
    spec, sp = fig1_gamma5
    # shifting all raw phases by a constant leaves eps~ unchanged
    shift = 0.1234
    u_shifted = np.exp(1j * shift)
    shifted_quasi = np.mod((sp.raw_phases + shift) / sp.tau, sp.branch)
    eps0 = shifted_quasi[sp.eps0_index]
    scaled = np.mod(shifted_quasi - eps0, sp.branch) / spec.derived.K
    assert np.allclose(scaled, sp.scaled, atol=1e-9)


def test_mode_orthonormality(fig1_gamma20):
    _, sp = fig1_gamma20
    gram = sp.modes.conj().T @ sp.modes
    assert np.max(np.abs(gram - np.eye(sp.dim))) < 1e-8


def test_low_occupation_modes_have_good_parity(fig1_gamma5):
    _, sp = fig1_gamma5
    low = np.argsort(sp.occupations)[:6]
    assert np.all(np.abs(sp.parity[low]) > 0.75)


def test_reference_undefined_when_cap_too_low(fig1_gamma20):
    _, sp = fig1_gamma20
    with pytest.raises(ReferenceUndefinedError):
        floquet.scale_quasienergies(sp, 1.0, occupation_cap=1e-3)


def test_spectrum_records_roundtrip(fig1_gamma5):
    _, sp = fig1_gamma5
    records = floquet.spectrum_records(sp)
    assert len(records) == sp.dim
    assert records[3]["quasienergy"] == pytest.approx(sp.quasienergies[3])
    assert records[3]["scaled"] == pytest.approx(sp.scaled[3])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kposim import fock
from kposim.errors import ContractViolationError, InvalidDimensionError, TruncationWarning


def test_annihilation_entries():
    a = fock.annihilation(3)
    assert a[0, 1] == pytest.approx(1.0)
    assert a[1, 2] == pytest.approx(np.sqrt(2.0))
    vac = np.zeros(3)
    vac[0] = 1.0
    assert np.allclose(a @ vac, 0.0)


def test_annihilation_rejects_small_dim():
    with pytest.raises(InvalidDimensionError):
        fock.annihilation(1)


@given(st.integers(min_value=2, max_value=60))
@settings(max_examples=15, deadline=None)
def test_commutator_identity_on_interior(dim):
    a = fock.annihilation(dim)
    comm = a @ a.conj().T - a.conj().T @ a
    interior = comm[: dim - 1, : dim - 1]
    assert np.max(np.abs(interior - np.eye(dim - 1))) < 1e-12


def test_coherent_vacuum():
    psi = fock.coherent_state(0.0, 10)
    assert psi[0] == pytest.approx(1.0)
    assert np.linalg.norm(psi[1:]) == 0.0


def test_coherent_occupation():
    psi = fock.coherent_state(1.0, 50)
    n = np.arange(50)
    assert n @ np.abs(psi) ** 2 == pytest.approx(1.0, abs=1e-8)


def test_coherent_truncation_warning():
    with pytest.warns(TruncationWarning):
        fock.coherent_state(3.0, 20)


@given(
    st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
    st.integers(min_value=40, max_value=120),
)
@settings(max_examples=20, deadline=None)
def test_coherent_eigenrelation(alpha, dim):
    if abs(alpha) ** 2 > dim / 8:
        alpha = alpha * np.sqrt(dim / 8) / (abs(alpha) + 1e-12)
    psi = fock.coherent_state(alpha, dim, warn_truncation=False)
    a = fock.annihilation(dim)
    assert np.linalg.norm(a @ psi - alpha * psi) < 1e-6


def test_hermitian_eig_diagonal():
    w, v = fock.hermitian_eig(np.diag([1.0, 2.0, 3.0]).astype(complex))
    assert np.allclose(w, [1.0, 2.0, 3.0])
    assert np.allclose(np.abs(v), np.eye(3))


def test_hermitian_eig_pauli_x():
    w, _ = fock.hermitian_eig(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))
    assert np.allclose(w, [-1.0, 1.0])


def test_hermitian_eig_reconstruction_random():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(100, 100)) + 1j * rng.normal(size=(100, 100))
    h = m + m.conj().T
    w, v = fock.hermitian_eig(h)
    scale = np.max(np.abs(h))
    assert np.max(np.abs(h @ v - v * w)) < 1e-8 * scale
    assert np.max(np.abs(v.conj().T @ v - np.eye(100))) < 1e-8


def test_hermitian_eig_rejects_nonhermitian():
    with pytest.raises(ContractViolationError):
        fock.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


def test_unitary_eig_identity():
    phases, _ = fock.unitary_eig(np.eye(4, dtype=complex))
    assert np.allclose(phases, 0.0)


def test_unitary_eig_diagonal_phases():
    u = np.diag([np.exp(1j * np.pi / 2), np.exp(1j * np.pi)])
    phases, _ = fock.unitary_eig(u)
    assert np.allclose(sorted(phases), [np.pi / 2, np.pi])


def test_unitary_eig_of_hermitian_exponential():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    h = m + m.conj().T
    t = 0.01
    u = fock.expm_hermitian_times(h, -1j * t)
    phases, _ = fock.unitary_eig(u)
    w, _ = fock.hermitian_eig(h)
    expected = np.sort(np.mod(-w * t, 2 * np.pi))
    assert np.allclose(np.sort(phases), expected, atol=1e-10)


def test_unitary_eig_rejects_nonunitary():
    with pytest.raises(ContractViolationError):
        fock.unitary_eig(2.0 * np.eye(3, dtype=complex))


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=10, deadline=None)
def test_unitary_eig_phase_set_invariant_under_conjugation(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    h = m + m.conj().T
    u = fock.expm_hermitian_times(h, -1j * 0.3)
    m2 = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    w = fock.expm_hermitian_times(m2 + m2.conj().T, -1j * 0.2)
    p1, _ = fock.unitary_eig(u)
    p2, _ = fock.unitary_eig(w @ u @ w.conj().T)
    assert np.allclose(np.sort(p1), np.sort(p2), atol=1e-8)


def test_expm_hermitian_diagonal():
    h = np.diag([0.0, 1.0]).astype(complex)
    u = fock.expm_hermitian_times(h, -1j * np.pi)
    assert np.allclose(u, np.diag([1.0, -1.0]), atol=1e-12)


def test_expm_hermitian_zero_scalar():
    h = np.diag([2.0, -1.0]).astype(complex)
    assert np.allclose(fock.expm_hermitian_times(h, 0.0), np.eye(2))


def test_expm_semigroup():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(25, 25)) + 1j * rng.normal(size=(25, 25))
    h = m + m.conj().T
    a, b = 0.37, -0.21
    lhs = fock.expm_hermitian_times(h, -1j * a) @ fock.expm_hermitian_times(h, -1j * b)
    rhs = fock.expm_hermitian_times(h, -1j * (a + b))
    assert np.max(np.abs(lhs - rhs)) < 1e-8

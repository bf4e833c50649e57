import numpy as np
import pytest

from kposim import floquet, model, phasespace, tracking
from kposim.errors import KposimError
from kposim.hamiltonians import HamiltonianSpec

from conftest import REF_G3, REF_G4, reference_spec


def small_provider(dim=80, n_steps=1024):
    return tracking.GammaSweepProvider(REF_G3, REF_G4, dim=dim, n_steps=n_steps)


def test_find_esqpt_state_is_phase_invariant(fig1_gamma5):
    spec, sp = fig1_gamma5
    packet = phasespace.origin_packet(spec, 0)
    a = tracking.find_esqpt_state(sp, packet)
    b = tracking.find_esqpt_state(sp, packet * np.exp(0.7j))
    assert a.index == b.index
    assert a.overlap == pytest.approx(b.overlap, rel=1e-12)


def test_find_esqpt_state_small_gamma():
    provider = small_provider()
    point = provider(2.0)
    packet = phasespace.origin_packet(point.spec, 0)
    state = tracking.find_esqpt_state(point.spectrum, packet)
    assert state.found
    assert state.overlap > 0.5


def test_detect_kissing_gamma20(fig1_gamma20):
    spec, sp = fig1_gamma20
    report = tracking.detect_kissing(sp, 20.0, pair_tol=1e-2)
    assert report.below_esqpt_count == 10
    assert report.cat_state_count == 2 * report.pair_count
    assert report.below_esqpt_count >= 2 * report.pair_count - 1
    assert not report.extrapolated
    # quadratic ESQPT line: the reference state sits near Gamma^2 in K units
    assert report.esqpt_scaled_energy == pytest.approx(400.0, rel=0.35)


def test_detect_kissing_pair_tolerance_sensitivity(fig1_gamma20):
    _, sp = fig1_gamma20
    counts = [
        tracking.detect_kissing(sp, 20.0, pair_tol=tol).pair_count
        for tol in (1e-3, 1e-2, 1e-1, 5.0)
    ]
    assert counts == sorted(counts)
    assert counts[-1] == 5


def test_detect_kissing_zero_gamma():
    provider = small_provider(dim=60)
    point = provider(0.0)
    report = tracking.detect_kissing(point.spectrum, 0.0)
    assert report.degenerate_by_construction
    # bottom pair degenerate far below the 2K level spacing (exact n(n-1)
    # degeneracy up to higher-order corrections)
    scaled = np.sort(point.spectrum.scaled)
    # splitting far below the 2 K gap to the next level
    assert scaled[1] - scaled[0] < 0.05
    assert scaled[2] - scaled[1] > 1.0


def test_detect_kissing_counts_invariant_under_gauge(fig1_gamma20):
    _, sp = fig1_gamma20
    report = tracking.detect_kissing(sp, 20.0)
    shifted = floquet.FloquetSpectrum(
        omega_d=sp.omega_d,
        quasienergies=np.mod(sp.quasienergies + 0.123, sp.branch),
        raw_phases=sp.raw_phases,
        modes=sp.modes,
        occupations=sp.occupations,
        parity=sp.parity,
        steps_used=sp.steps_used,
        scaled=sp.scaled,
        eps0_index=sp.eps0_index,
        occupation_cap=sp.occupation_cap,
    )
    report2 = tracking.detect_kissing(shifted, 20.0)
    assert report.below_esqpt_count == report2.below_esqpt_count
    assert report.pair_count == report2.pair_count


def test_trace_continuity_small_steps():
    provider = small_provider()
    grid = np.array([3.0, 3.001])
    line = tracking.trace_line_overlap(provider, 0, grid)
    assert line.status == ["ok", "ok"]
    assert line.overlaps[1] > 0.999


def test_trace_fmin_matches_effective_ground():
    provider = small_provider()
    grid = np.arange(2.0, 8.1, 1.0)
    line = tracking.trace_line_overlap(provider, 0, grid)
    assert all(s == "ok" for s in line.status)
    # the followed mode stays close to the local effective ground state
    point = provider(8.0)
    mode = point.spectrum.modes[:, line.mode_indices[-1]]
    overlap = np.abs(point.eff_states[:, 0].conj() @ mode) ** 2
    # micromotion dressing reduces the bare overlap well below 1 already at
    # these couplings; 0.7 still identifies the state unambiguously
    assert overlap > 0.7


def test_trace_schemes_agree_in_regular_regime():
    provider = small_provider()
    grid = np.arange(2.0, 6.1, 0.5)
    by_overlap = tracking.trace_line_overlap(provider, 2, grid)
    by_anchor = tracking.trace_line_anchor(provider, 2, grid)
    assert by_overlap.mode_indices == by_anchor.mode_indices


def test_trace_anchor_zero_is_fmin_line():
    provider = small_provider()
    grid = np.array([4.0, 5.0])
    line = tracking.trace_line_anchor(provider, 0, grid)
    for gamma, idx, energy in zip(line.gamma_values, line.mode_indices,
                                  line.scaled_energies):
        point = provider(gamma)
        # the anchor-0 line is the well-bottom pair: either the reference mode
        # itself or its quasi-degenerate parity partner
        assert energy < 0.1
        ref = point.spectrum.eps0_index
        assert idx == ref or abs(point.spectrum.scaled[idx]
                                 - point.spectrum.scaled[ref]) < 0.1


def test_trace_rejects_bad_grid():
    provider = small_provider()
    with pytest.raises(KposimError):
        tracking.trace_lines(provider, [0], np.array([2.0, 1.0]))
    with pytest.raises(KposimError):
        tracking.trace_lines(provider, [0], np.array([]))


def test_empty_window_diagnostics():
    provider = small_provider()
    point = provider(3.0)
    constraints = tracking.TraceConstraints(energy_window=(1e6, 1e6 + 1.0))
    with pytest.raises(tracking.EmptyWindowError) as err:
        tracking.select_mode(point, point.eff_states[:, 0], 0.0, constraints)
    assert err.value.gamma == 3.0

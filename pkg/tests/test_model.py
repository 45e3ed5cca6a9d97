import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from tqrm.errors import ParameterError, SectorUnavailable
from tqrm.model import (
    FockTruncation,
    Frame,
    ModelParams,
    Sector,
    appendix_assembly_report,
    build_hamiltonian,
    build_sector_hamiltonian,
    check_symmetric,
    commutator_norm,
    exchange_operator,
    parity_operator,
    sector_basis,
    verify_appendix_assembly,
    verify_tripartite_reduction,
)

coupling = st.floats(-2.0, 2.0, allow_nan=False)
rabi = st.floats(0.0, 2.0, allow_nan=False)
detuning = st.floats(-1.0, 1.0, allow_nan=False)
freq = st.floats(0.3, 2.0, allow_nan=False)


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(omega=0.0)
    with pytest.raises(ParameterError):
        ModelParams(Omega=-0.1)
    with pytest.raises(ParameterError):
        ModelParams(g=math.nan)
    with pytest.raises(ParameterError):
        FockTruncation(0)
    assert ModelParams(omega=2.0, Omega=0.5).g_c == pytest.approx(1.0)


def test_free_hamiltonian_is_diagonal():
    H = build_hamiltonian(ModelParams(1.0, 0.0, 0.0, 0.0), 2)
    np.testing.assert_array_equal(np.diag(np.diag(H)), H)
    assert sorted(np.diag(H)) == [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]


def test_hamiltonian_matches_elementwise_construction():
    p = ModelParams(1.3, 0.4, -0.2, 0.7)
    np.testing.assert_allclose(build_hamiltonian(p, 12), oracle.hamiltonian(1.3, 0.4, -0.2, 0.7, 12), atol=1e-14)


def test_uncoupled_ground_energy():
    p = ModelParams(1.0, 0.3, 0.4, 0.0)
    assert np.linalg.eigvalsh(build_hamiltonian(p, 4))[0] == pytest.approx(-1.0, abs=1e-14)


def test_asymmetric_input_rejected():
    with pytest.raises(ParameterError):
        check_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_resonant_sector_requires_zero_detuning():
    with pytest.raises(SectorUnavailable):
        build_sector_hamiltonian(ModelParams(1, 1, 0.1, 1), 5, Sector.RESONANT_COLLECTIVE)


def test_sector_bases_are_orthonormal_partitions():
    triplet = np.vstack([sector_basis(Sector.TRIPLET_ROTATED), sector_basis(Sector.SINGLET_ROTATED)])
    np.testing.assert_allclose(triplet @ triplet.T, np.eye(4), atol=1e-15)
    resonant = np.vstack([sector_basis(s) for s in (Sector.RESONANT_COLLECTIVE, Sector.RESONANT_PLUS, Sector.RESONANT_MINUS)])
    np.testing.assert_allclose(resonant @ resonant.T, np.eye(4), atol=1e-15)


def test_singlet_levels_closed_form():
    p = ModelParams(1.0, 0.7, 0.3, 0.6)
    vals = np.linalg.eigvalsh(build_sector_hamiltonian(p, 80, Sector.SINGLET_ROTATED))
    n = np.arange(31)
    np.testing.assert_allclose(vals[:31], n - 0.36, atol=1e-10)


def test_parity_entries():
    P = np.diag(parity_operator(2))
    np.testing.assert_array_equal(P, [1, -1, 1, -1, 1, -1])


def test_reduction_and_appendix_residuals():
    for g in (0.0, 1.0, -1.0, 100.0, -100.0):
        assert verify_tripartite_reduction(g) <= 1e-14
    assert verify_appendix_assembly(1.0, 0.1) <= 1e-13
    rep = appendix_assembly_report(1.0, 0.1)
    assert rep.printed_single_spin_residual > 0.5


@settings(max_examples=25, deadline=None)
@given(freq, rabi, detuning, coupling)
def test_symmetric_and_frames_agree(w, W, eps, g):
    p = ModelParams(w, W, eps, g)
    Ho = build_hamiltonian(p, 20, Frame.ORIGINAL)
    Hr = build_hamiltonian(p, 20, Frame.ROTATED)
    check_symmetric(Ho)
    check_symmetric(Hr)
    a, b = np.linalg.eigvalsh(Ho), np.linalg.eigvalsh(Hr)
    assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


@settings(max_examples=25, deadline=None)
@given(freq, rabi, detuning, coupling)
def test_detuned_sectors_complete(w, W, eps, g):
    p = ModelParams(w, W, eps, g)
    parts = [np.linalg.eigvalsh(build_sector_hamiltonian(p, 20, s)) for s in (Sector.TRIPLET_ROTATED, Sector.SINGLET_ROTATED)]
    union = np.sort(np.concatenate(parts))
    full = np.linalg.eigvalsh(build_hamiltonian(p, 20))
    assert np.max(np.abs(union - full)) <= 1e-10 * max(1.0, np.max(np.abs(full)))


@settings(max_examples=25, deadline=None)
@given(freq, rabi, coupling)
def test_resonant_sectors_complete_and_parity(w, W, g):
    p = ModelParams(w, W, 0.0, g)
    sectors = (Sector.RESONANT_COLLECTIVE, Sector.RESONANT_PLUS, Sector.RESONANT_MINUS)
    union = np.sort(np.concatenate([np.linalg.eigvalsh(build_sector_hamiltonian(p, 20, s)) for s in sectors]))
    full = np.linalg.eigvalsh(build_hamiltonian(p, 20))
    assert np.max(np.abs(union - full)) <= 1e-10 * max(1.0, np.max(np.abs(full)))
    Hs = build_sector_hamiltonian(p, 20, Sector.RESONANT_COLLECTIVE)
    assert commutator_norm(Hs, parity_operator(20)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(freq, rabi, detuning, coupling)
def test_exchange_symmetry(w, W, eps, g):
    H = build_hamiltonian(ModelParams(w, W, eps, g), 15)
    assert commutator_norm(H, exchange_operator(15)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-100.0, 100.0, allow_nan=False))
def test_reduction_identity(g):
    assert verify_tripartite_reduction(g) <= 1e-14

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.special import eval_genlaguerre, factorial

import oracle
from tqrm.errors import NotAState, ParameterError, TruncationWarning
from tqrm.phonon import (
    PhaseSpaceGrid,
    ReferenceState,
    RefKind,
    check_state,
    coherent_state,
    displacement_matrix,
    fidelity,
    laguerre_functions,
    mean_phonon_number,
    position_density,
    purity,
    quadrature_variances,
    reference_density,
    wigner,
)


def test_laguerre_against_scipy():
    y = np.array([0.0, 0.3, 2.5, 11.0])
    u = laguerre_functions(y, 6, 4)
    for k in range(5):
        for n in range(7):
            ref = np.sqrt(factorial(n) / factorial(n + k)) * y ** (k / 2) * np.exp(-y / 2) * eval_genlaguerre(n, k, y)
            np.testing.assert_allclose(u[k, n], ref, atol=1e-13)


def test_displacement_acts_on_vacuum():
    D = displacement_matrix(0.7, 40)
    np.testing.assert_allclose(D[:, 0], oracle.coherent(0.7, 40), atol=1e-14)
    D2 = displacement_matrix(-1.1, 60, 10)
    assert D2.shape == (61, 11)
    np.testing.assert_allclose(D2.T @ D2, np.eye(11), atol=1e-12)


def test_coherent_state_and_warning():
    np.testing.assert_allclose(coherent_state(1.3, 40), oracle.coherent(1.3, 40), atol=1e-14)
    with pytest.warns(TruncationWarning):
        v = coherent_state(4.0, 12)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_vacuum_measures():
    vac = reference_density(ReferenceState(RefKind.VACUUM, n_max=10))
    assert purity(vac) == pytest.approx(1.0)
    assert mean_phonon_number(vac) == 0.0
    assert quadrature_variances(vac) == pytest.approx((0.5, 0.5))
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(position_density(vac, x), np.exp(-x * x) / math.sqrt(math.pi), atol=1e-15)


def test_coherent_variances_and_number():
    rho = reference_density(ReferenceState(RefKind.COHERENT, 1.5, 60))
    vx, vp = quadrature_variances(rho)
    assert (vx, vp) == pytest.approx((0.5, 0.5), abs=1e-12)
    assert mean_phonon_number(rho) == pytest.approx(2.25, abs=1e-12)


def test_cat_states():
    even = reference_density(ReferenceState(RefKind.CAT_PLUS, 1.0, 50))
    odd = reference_density(ReferenceState(RefKind.CAT_MINUS, 1.0, 50))
    assert np.all(np.abs(np.diag(even)[1::2]) < 1e-15)
    assert np.all(np.abs(np.diag(odd)[0::2]) < 1e-15)
    assert mean_phonon_number(even) == pytest.approx(math.tanh(1.0), abs=1e-12)
    with pytest.raises(ParameterError):
        ReferenceState(RefKind.CAT_MINUS, 0.0)


def test_mixture_matches_oracle():
    mine = reference_density(ReferenceState(RefKind.MIXTURE, 2.0, 60))
    np.testing.assert_allclose(mine, oracle.mixture(2.0, 60), atol=1e-14)


def test_fidelity_with_pure_state_is_expectation():
    a = reference_density(ReferenceState(RefKind.MIXTURE, 1.2, 40))
    b = reference_density(ReferenceState(RefKind.COHERENT, 0.9, 40))
    exact = 0.5 * (math.exp(-(1.2 - 0.9) ** 2) + math.exp(-(1.2 + 0.9) ** 2))
    assert fidelity(a, b) == pytest.approx(exact, abs=1e-12)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_full_rank_against_sqrtm():
    rng = np.random.default_rng(3)
    mats = []
    for _ in range(2):
        A = rng.normal(size=(8, 8))
        R = A @ A.T + 0.1 * np.eye(8)
        mats.append(R / np.trace(R))
    assert fidelity(*mats) == pytest.approx(oracle.fidelity(*mats), abs=1e-10)


def test_fidelity_pads_cutoffs():
    small = reference_density(ReferenceState(RefKind.VACUUM, n_max=5))
    big = reference_density(ReferenceState(RefKind.VACUUM, n_max=30))
    assert fidelity(small, big) == pytest.approx(1.0)


def test_not_a_state():
    with pytest.raises(NotAState):
        check_state(np.diag([1.2, -0.2]))
    with pytest.raises(NotAState):
        fidelity(np.diag([0.5, 0.4]), np.diag([1.0, 0.0]))
    with pytest.raises(ParameterError):
        purity(np.ones(3))


@pytest.mark.filterwarnings("ignore:phase-space grid spacing")
def test_wigner_matches_displaced_parity():
    rho = reference_density(ReferenceState(RefKind.CAT_PLUS, 1.5, 40))
    grid = PhaseSpaceGrid(-2, 2, -1, 1, 5, 3)
    W = wigner(rho, grid)
    for i, x in enumerate(grid.x):
        for j, p in enumerate(grid.p):
            assert W[i, j] == pytest.approx(oracle.wigner_point(rho, x, p), abs=1e-10)


@pytest.mark.filterwarnings("ignore:phase-space grid spacing")
def test_wigner_vacuum_and_fock_negativity():
    W = wigner(reference_density(ReferenceState(RefKind.VACUUM, n_max=3)), PhaseSpaceGrid(-1, 1, -1, 1, 3, 3))
    assert W[1, 1] == pytest.approx(1 / math.pi)
    fock1 = np.diag([0.0, 1.0])
    assert wigner(fock1, PhaseSpaceGrid(-1, 1, -1, 1, 3, 3))[1, 1] == pytest.approx(-1 / math.pi)


def test_wigner_normalised_and_coarse_grid_warns():
    rho = reference_density(ReferenceState(RefKind.MIXTURE, 2.0, 60))
    grid = PhaseSpaceGrid()
    W = wigner(rho, grid)
    assert trapezoid(trapezoid(W, grid.p, axis=1), grid.x) == pytest.approx(1.0, abs=1e-8)
    with pytest.warns(UserWarning):
        wigner(rho, PhaseSpaceGrid(nx=21, np=21))


def test_mixture_purity_tends_to_half():
    values = [purity(reference_density(ReferenceState(RefKind.MIXTURE, a, 80))) for a in (0.5, 1.0, 2.0, 4.0)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(0.5, abs=1e-12)


states = st.sampled_from([RefKind.VACUUM, RefKind.COHERENT, RefKind.CAT_PLUS, RefKind.MIXTURE])


@settings(max_examples=10, deadline=None)
@given(states, st.floats(0.3, 2.5))
def test_wigner_marginal_is_position_density(kind, alpha):
    rho = reference_density(ReferenceState(kind, alpha, 60))
    grid = PhaseSpaceGrid()
    W = wigner(rho, grid)
    marginal = trapezoid(W, grid.p, axis=1)
    np.testing.assert_allclose(marginal, position_density(rho, grid.x), atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(states, st.floats(0.1, 3.0), states, st.floats(0.1, 3.0))
def test_fidelity_bounds(k1, a1, k2, a2):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        rho = reference_density(ReferenceState(k1, a1, 50))
        sigma = reference_density(ReferenceState(k2, a2, 50))
    f = fidelity(rho, sigma)
    assert -1e-12 <= f <= 1 + 1e-9
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-8)
    assert purity(rho) <= 1 + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-3.0, 3.0))
def test_coherent_density_is_shifted_vacuum(alpha):
    x = np.linspace(-6, 6, 121)
    rho = reference_density(ReferenceState(RefKind.COHERENT, alpha, 80))
    shifted = np.exp(-(x - math.sqrt(2) * alpha) ** 2) / math.sqrt(math.pi)
    np.testing.assert_allclose(position_density(rho, x), shifted, atol=1e-8)

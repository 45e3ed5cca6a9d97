
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import zeta

import oracle
from tqrm.errors import ParameterError, PoleProximity, ResonantCase, ZeroCoupling
from tqrm.gfunction import (
    POLE_GUARD,
    RootKind,
    a_side_coefficients,
    b_side_coefficients,
    completed_sum,
    excluded_fraction,
    find_roots,
    g_from_sides,
    g_function,
    g_values,
    hurwitz_tail,
    matching_mismatch,
    nearest_pole_distance,
    pole_positions,
    singlet_energies,
    wavefunction_agreement,
)
from tqrm.model import ModelParams

DETUNED = ModelParams(1.0, 0.4, 0.2, 0.5)


@pytest.fixture(scope="module")
def detuned_roots():
    return find_roots(DETUNED, (-1.0, 3.0))


@pytest.fixture(scope="module")
def detuned_levels():
    return oracle.triplet_levels(1.0, 0.4, 0.2, 0.5, 240)


def test_roots_match_exact_levels(detuned_roots, detuned_levels):
    regular = [r.E for r in detuned_roots if r.kind is RootKind.REGULAR]
    assert len(regular) >= 6
    for E in regular:
        assert np.min(np.abs(detuned_levels - E)) < 1e-6
    inside = detuned_levels[(detuned_levels > -1) & (detuned_levels < 3)]
    assert len(regular) == inside.size


def test_roots_are_ascending_and_residual_small(detuned_roots):
    energies = [r.E for r in detuned_roots]
    assert energies == sorted(energies)
    assert all(r.residual_G < 1e-8 for r in detuned_roots)


def test_oracle_distance_reported():
    roots = find_roots(DETUNED, (-0.5, 0.5), trunc_for_oracle=120)
    assert all(r.ed_match is not None and r.ed_match < 1e-6 for r in roots)


def test_spurious_zero_filtered():
    kept = find_roots(DETUNED, (1.1, 1.3), keep_spurious=True)
    spurious = [r for r in kept if r.kind is RootKind.SPURIOUS]
    assert any(abs(r.E - 1.1975) < 1e-3 for r in spurious)
    assert matching_mismatch(spurious[0].E, DETUNED) > 1e-3
    assert all(r.kind is not RootKind.SPURIOUS for r in find_roots(DETUNED, (1.1, 1.3)))


def test_wavefunctions_proportional_at_roots(detuned_roots):
    for r in detuned_roots[:6]:
        assert wavefunction_agreement(r.E, DETUNED) >= 1 - 1e-6


def test_wavefunctions_differ_off_root():
    assert wavefunction_agreement(0.1, DETUNED) < 0.999


def test_domain_errors():
    with pytest.raises(ZeroCoupling):
        g_function(0.1, ModelParams(1, 0.4, 0.2, 0.0))
    with pytest.raises(ResonantCase):
        g_function(0.1, ModelParams(1, 0.4, 0.0, 0.5))
    with pytest.raises(ParameterError):
        g_function(0.1, ModelParams(1, 0.0, 0.2, 0.5))
    pole = -0.25 + 0.4
    with pytest.raises(PoleProximity) as info:
        g_function(pole + 1e-6, DETUNED)
    assert info.value.m == 0


def test_pole_positions_and_distance():
    coupled, plus = pole_positions(DETUNED, 2)
    np.testing.assert_allclose(np.sort(coupled), [-0.65, 0.15, 0.35, 1.15, 1.35, 2.15])
    np.testing.assert_allclose(plus, [-0.25, 0.75, 1.75])
    assert nearest_pole_distance(np.array([0.2]), DETUNED, 2)[0] == pytest.approx(0.05)
    assert 0 < excluded_fraction(DETUNED, (-1, 3)) < 0.01


def test_singlet_energies():
    np.testing.assert_allclose(singlet_energies(DETUNED, 3), [-0.25, 0.75, 1.75])


def test_sign_flip_under_negative_detuning():
    flipped = ModelParams(1.0, 0.4, -0.2, 0.5)
    E = np.array([-0.9, 0.0, 0.6, 2.5])
    a, _, _, _ = g_values(E, DETUNED)
    b, _, _, _ = g_values(E, flipped)
    np.testing.assert_allclose(np.abs(a), np.abs(b), rtol=1e-9)


def test_rescaling_invariance():
    E, M = 0.2, 128
    a = a_side_coefficients(E, DETUNED, M)
    base = g_from_sides(a, b_side_coefficients(E, DETUNED, M, a), DETUNED)[0]
    s = 1e-3
    scaled_a = a.scaled(s)
    scaled = g_from_sides(scaled_a, b_side_coefficients(E, DETUNED, M, scaled_a), DETUNED)[0]
    assert scaled == pytest.approx(s * s * base, rel=1e-12)

    def root(scale):
        def f(x):
            av = a_side_coefficients(x, DETUNED, M).scaled(scale)
            return float(g_from_sides(av, b_side_coefficients(x, DETUNED, M, av), DETUNED)[0])
        return brentq(f, 0.36, 0.5, xtol=1e-14)

    assert abs(root(1.0) - root(s)) < 1e-13


def test_hurwitz_tail_against_zeta():
    s = np.array([1.5, 2.3, 4.0])
    np.testing.assert_allclose(hurwitz_tail(s, 50.0), zeta(s, 50.0), rtol=1e-13)


def test_hurwitz_tail_continuation():
    mpmath = pytest.importorskip("mpmath")
    for s in (0.3, 0.75, 1.25):
        assert hurwitz_tail(np.array([s]), 200.0)[0] == pytest.approx(float(mpmath.zeta(s, 200.0)), rel=1e-12)


def test_completed_sum_algebraic_series():
    n = np.arange(1, 201, dtype=float)
    sigma = np.array([1.7, 2.6])
    terms = np.stack([n ** (-s) * (1 + 0.5 / n) for s in sigma])
    exact = zeta(sigma, 1.0) + 0.5 * zeta(sigma + 1, 1.0)
    padded = np.hstack([np.zeros((2, 1)), terms])  # index n = 0 holds nothing
    np.testing.assert_allclose(completed_sum(padded, sigma), exact, rtol=1e-10)


def test_adaptive_cap_stability():
    E = np.arange(-1.0, 3.0, 0.0137)
    E = E[nearest_pole_distance(E, DETUNED, 400) > 10 * POLE_GUARD]
    v1, s1, _, _ = g_values(E, DETUNED, 64, 400, strict=False)
    v2, s2, _, _ = g_values(E, DETUNED, 128, 800, strict=False)
    assert np.max(np.abs(v1 - v2) / np.maximum(s1, s2)) < 1e-10


@settings(max_examples=6, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(0.05, 0.5), st.floats(0.2, 1.0))
def test_random_roots_match_exact_levels(W, eps, g):
    p = ModelParams(1.0, W, eps, g)
    levels = oracle.triplet_levels(1.0, W, eps, g, 160)
    lo = levels[0] - 0.05
    roots = find_roots(p, (lo, levels[0] + 4.0))
    for r in roots:
        if r.kind is RootKind.REGULAR:
            assert np.min(np.abs(levels - r.E)) < 1e-6
            assert wavefunction_agreement(r.E, p) >= 1 - 1e-6
    found = np.array([r.E for r in roots])
    for level in levels[(levels > lo + 0.01) & (levels < levels[0] + 3.99)]:
        assert found.size and np.min(np.abs(found - level)) < 1e-3

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from chaindecay import exact as X
from chaindecay.model import ConvergenceFailure, InvalidParameters, build_hamiltonian, make_params


def test_t0_probability_one(weak_link, backend):
    for m in (2, 20, 500):
        s = X.evolve_finite(weak_link, [0.0], m_sites=m, backend=backend)
        assert s.probability[0] == pytest.approx(1.0, abs=1e-12)


def test_matches_matrix_exponential(strong_link, backend):
    m = 12
    h = build_hamiltonian(strong_link, m)
    for t in (0.3, 2.0, 7.5):
        u = expm(-1j * h * t)
        s = X.evolve_finite(strong_link, [t], m_sites=m, backend=backend)
        assert s.amplitude[0] == pytest.approx(u[0, 0], abs=1e-12)
        s = X.evolve_finite(strong_link, [t], i=2, f=5, m_sites=m, backend=backend)
        assert s.amplitude[0] == pytest.approx(u[5, 2], abs=1e-12)


def test_reduced_mode_matches_full(weak_link, backend):
    t = np.linspace(0, 20, 201)
    red = X.evolve_finite(weak_link, t, m_sites=300, backend=backend)
    lam, w = X.first_site_spectrum(weak_link, 300, backend=backend)
    from scipy.linalg import eigh_tridiagonal
    from chaindecay.model import chain_arrays
    lam_f, vec = eigh_tridiagonal(*chain_arrays(weak_link, 300))
    np.testing.assert_allclose(lam, lam_f, atol=1e-12)
    np.testing.assert_allclose(w, vec[0] ** 2, atol=1e-13)
    full = np.exp(-1j * np.outer(t, lam_f)) @ (vec[0] ** 2)
    np.testing.assert_allclose(red.amplitude, full, atol=1e-12)


def test_unitarity_random_times(strong_link, rng):
    t = rng.uniform(0, 40, 100)
    probs = X.site_probabilities(strong_link, t, i=0, m_sites=20)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 3.9), st.floats(0.05, 1.5), st.integers(2, 60), st.floats(0, 100))
def test_unitarity_property(e0, v0, m, t):
    probs = X.site_probabilities(make_params(e0, v0), [t], i=0, m_sites=m)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_transition_symmetry(weak_link):
    t = np.linspace(0, 10, 21)
    a = X.evolve_finite(weak_link, t, i=1, f=4, m_sites=30)
    b = X.evolve_finite(weak_link, t, i=4, f=1, m_sites=30)
    np.testing.assert_allclose(a.probability, b.probability, atol=1e-14)


def test_light_cone(weak_link):
    t = 5.0
    probs = X.site_probabilities(weak_link, [t], i=0, m_sites=200)[0]
    far = np.arange(200) > 2 * 4 * t + 10
    assert probs[far].max() < 1e-10


def test_site_index_errors(weak_link):
    with pytest.raises(IndexError):
        X.evolve_finite(weak_link, [1.0], i=0, f=20, m_sites=20)
    with pytest.raises(InvalidParameters):
        X.evolve_finite(weak_link, [1.0])


def test_negative_times_rejected(weak_link):
    with pytest.raises(ValueError):
        X.evolve_finite(weak_link, [-1.0], m_sites=10)


def test_series_invariants(strong_link):
    s = X.evolve_finite(strong_link, np.linspace(0, 30, 301), m_sites=20)
    np.testing.assert_allclose(s.probability, np.abs(s.amplitude) ** 2, rtol=0, atol=0)
    assert s.probability.max() <= 1 + 1e-9 and s.source_tag == "diagonalization"


# mesoscopic echo


def test_echo_m20_window(strong_link):
    t = np.arange(0, 40, 0.01)
    s = X.evolve_finite(strong_link, t, m_sites=20)
    echo = X.echo_time(s, strong_link)
    assert 16 <= echo.time <= 28
    assert echo.probability >= 10 * X.envelope_semi_infinite(strong_link, echo.time)
    assert echo.ratio_to_m_over_b == pytest.approx(echo.time / 5.0)


def test_echo_doubles_with_m(strong_link):
    t = np.arange(0, 70, 0.01)
    e20 = X.echo_time(X.evolve_finite(strong_link, t, m_sites=20), strong_link)
    e40 = X.echo_time(X.evolve_finite(strong_link, t, m_sites=40), strong_link)
    assert 1.7 <= e40.time / e20.time <= 2.3


def test_echo_round_trip_estimate(strong_link):
    t = np.arange(0, 40, 0.01)
    echo = X.echo_time(X.evolve_finite(strong_link, t, m_sites=20), strong_link)
    assert echo.time == pytest.approx(X.echo_round_trip(strong_link, 20), rel=0.05)


def test_echo_window_not_covered(strong_link):
    s = X.evolve_finite(strong_link, np.linspace(0, 10, 101), m_sites=20)
    with pytest.raises(ValueError):
        X.echo_time(s, strong_link)


@pytest.mark.parametrize("pair", [(1.0, 0.4), (1.3, 0.75)])
def test_no_revival_semi_infinite_emulation(pair):
    p = make_params(*pair)
    t = np.linspace(0.5, 15, 3000)
    s = X.evolve_finite(p, t, m_sites=800)
    assert np.max(s.probability / X.envelope_semi_infinite(p, t)) < 3


# converged reference


def test_converged_reference_weak_link(weak_link, backend):
    t = np.linspace(0, 15, 1501)
    ref = X.converged_reference(weak_link, t, tol=1e-10, backend=backend)
    assert ref.meta["m_sites"] <= 1024
    assert ref.meta["max_change"] < 1e-10
    assert 15 < 0.8 * ref.meta["m_sites"] / 4


def test_converged_reference_short_window():
    for pair in [(1.0, 0.4), (1.3, 0.75), (4.5, 0.4)]:
        ref = X.converged_reference(make_params(*pair), np.linspace(0, 1, 101), tol=1e-10)
        assert ref.meta["m_sites"] == 64


def test_converged_reference_t0(strong_link):
    ref = X.converged_reference(strong_link, [0.0])
    assert ref.probability[0] == pytest.approx(1.0, abs=1e-13)


def test_converged_reference_cap(weak_link):
    with pytest.raises(ConvergenceFailure):
        X.converged_reference(weak_link, np.linspace(0, 100, 11), m_cap=256)

import numpy as np
import pytest
from scipy.linalg import eigvalsh_tridiagonal

from chaindecay.model import (
    ChainParams,
    InvalidParameters,
    NotResonant,
    build_hamiltonian,
    chain_arrays,
    make_params,
    require_resonant,
    resonance_condition,
    validate,
)


def test_weak_link_example_is_resonant():
    assert make_params(1.0, 0.4).is_resonant


def test_band_center_tiny_coupling_is_resonant():
    assert make_params(2.0, 1e-9).is_resonant


def test_far_site_energy_not_resonant():
    p = make_params(4.5, 0.4)
    assert not p.is_resonant
    with pytest.raises(NotResonant):
        require_resonant(p)


@pytest.mark.parametrize("kw", [dict(v=0.0), dict(v=-1.0), dict(v0=0.0), dict(v0=-0.2), dict(m_sites=1),
                                dict(m_sites=2.5), dict(hbar=0.0), dict(epsilon0=np.nan)])
def test_validate_rejects(kw):
    base = dict(epsilon0=1.0, v0=0.4, v=1.0, m_sites=None, hbar=1.0)
    base.update(kw)
    with pytest.raises(InvalidParameters):
        validate(ChainParams(**base))


def test_strong_link_accepted_but_pole_paths_refuse():
    p = make_params(2.0, 1.0)
    assert p.v0 == p.v
    with pytest.raises(InvalidParameters):
        require_resonant(p)


def test_band_spec():
    b = make_params(1.0, 0.4, v=1.5).band
    assert b.eps_lower == 0.0 and b.eps_upper == 6.0 and b.bandwidth == 6.0


def test_params_frozen():
    p = make_params(1.0, 0.4)
    with pytest.raises(AttributeError):
        p.v0 = 0.5


def test_hamiltonian_m2():
    h = build_hamiltonian(make_params(1.0, 0.4), 2)
    np.testing.assert_array_equal(h, [[1.0, -0.4], [-0.4, 2.0]])


def test_hamiltonian_m3():
    d, e = chain_arrays(make_params(1.3, 0.75), 3)
    np.testing.assert_array_equal(d, [1.3, 2.0, 2.0])
    np.testing.assert_array_equal(e, [-0.75, -1.0])
    h = build_hamiltonian(make_params(1.3, 0.75), 3)
    np.testing.assert_array_equal(h, h.T)


def test_hamiltonian_needs_sites():
    with pytest.raises(InvalidParameters):
        build_hamiltonian(make_params(1.0, 0.4))


def test_m20_spectrum_inside_band(strong_link):
    lam = eigvalsh_tridiagonal(*chain_arrays(strong_link, 20))
    assert lam.size == 20
    assert lam.min() > -1e-9 and lam.max() < 4.0 + 1e-9


def test_extremal_eigenvalues_approach_band_edges(weak_link):
    lows, highs = [], []
    for m in (50, 200, 800):
        lam = eigvalsh_tridiagonal(*chain_arrays(weak_link, m))
        lows.append(lam.min())
        highs.append(lam.max())
    assert all(x > 0 for x in lows) and all(x < 4 for x in highs)
    assert lows[0] > lows[1] > lows[2]
    assert highs[0] < highs[1] < highs[2]


def test_localized_level_survives_large_m():
    p = make_params(4.5, 0.4)
    tops = [eigvalsh_tridiagonal(*chain_arrays(p, m)).max() for m in (50, 200, 800)]
    assert min(tops) > 4.0
    assert np.ptp(tops) < 1e-10


def test_condition_boundary_flip():
    v0 = 0.5
    edge = 2.0 - v0 ** 2
    assert resonance_condition(2.0 + edge - 1e-9, v0)
    assert not resonance_condition(2.0 + edge + 1e-9, v0)


def test_with_sites():
    p = make_params(1.0, 0.4).with_sites(20)
    assert p.m_sites == 20 and p.is_resonant

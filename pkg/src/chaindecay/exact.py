"""Finite-chain propagation by exact diagonalization.

This is the brute-force reference path: the amplitude
``<f| exp(-i H t / hbar) |i>`` is summed over the eigenpairs of the M-site
tridiagonal Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import kernels
from .model import ChainParams, ConvergenceFailure, InvalidParameters, chain_arrays
from .spectrum import pole_data

SOURCE_TAGS = ("diagonalization", "spectral_ft", "spectral_density", "pole_plus_cut", "piecewise_model", "external")


@dataclass(frozen=True)
class AmplitudeSeries:
    """Time series of a transition amplitude and its probability.

    ``amplitude`` is ``<f| exp(-i H t / hbar) |i>`` (that is, ``i hbar G^R(t)``)
    and may be ``None`` for paths that only produce a probability.
    """

    times: np.ndarray
    amplitude: np.ndarray | None
    probability: np.ndarray
    source_tag: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source_tag not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag {self.source_tag!r}")

    @classmethod
    def from_amplitude(cls, times, amplitude, source_tag, **meta) -> "AmplitudeSeries":
        amplitude = np.asarray(amplitude, dtype=complex)
        return cls(np.asarray(times, dtype=float), amplitude, np.abs(amplitude) ** 2, source_tag, meta)


def _check_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return t


def first_site_spectrum(params: ChainParams, m_sites: int | None = None, backend=None):
    """Eigenvalues and squared overlaps |<psi_k|0>|^2 without forming eigenvectors."""
    diag, off = chain_arrays(params, m_sites)
    lam, z = kernels.tridiag_first_row(diag, off, backend=backend)
    return lam, z * z


def evolve_finite(params: ChainParams, times, i: int = 0, f: int = 0,
                  m_sites: int | None = None, backend=None) -> AmplitudeSeries:
    """Amplitude from site ``i`` to site ``f`` on the M-site chain."""
    m = params.m_sites if m_sites is None else m_sites
    if m is None:
        raise InvalidParameters("evolve_finite needs m_sites")
    if not (0 <= i < m and 0 <= f < m):
        raise IndexError(f"site indices ({i}, {f}) out of range for M = {m}")
    t = _check_times(times)
    if i == 0 and f == 0:
        lam, w = first_site_spectrum(params, m, backend=backend)
    else:
        diag, off = chain_arrays(params, m)
        lam, vec = eigh_tridiagonal(diag, off)
        w = vec[f] * vec[i]
    amp = kernels.spectral_sum(lam, w, t / params.hbar, backend=backend)
    return AmplitudeSeries.from_amplitude(t, amp, "diagonalization", m_sites=m, i=i, f=f)


def site_probabilities(params: ChainParams, times, i: int = 0, m_sites: int | None = None) -> np.ndarray:
    """P_{f,i}(t) for every site f; shape (len(times), M)."""
    m = params.m_sites if m_sites is None else m_sites
    diag, off = chain_arrays(params, m)
    lam, vec = eigh_tridiagonal(diag, off)
    t = _check_times(times)
    phase = np.exp(-1j * np.outer(t / params.hbar, lam))
    amp = (phase * vec[i][None, :]) @ vec.T
    return np.abs(amp) ** 2


def echo_round_trip(params: ChainParams, m_sites: int) -> float:
    """Time for a packet at the resonance group velocity to cross the chain and return.

    The group velocity at energy e is 2 Gamma(e) / hbar (lattice spacing 1);
    for non-resonant parameters the band-maximum 2 v / hbar is used.
    """
    if params.is_resonant and params.v0 < params.v:
        try:
            gam = pole_data(params).gamma_at_er
        except InvalidParameters:
            gam = params.v
    else:
        gam = params.v
    return params.hbar * (m_sites - 1) / gam


@dataclass(frozen=True)
class EchoResult:
    time: float
    probability: float
    ratio_to_m_over_b: float
    predicted_round_trip: float
    window: tuple[float, float]


def echo_time(series: AmplitudeSeries, params: ChainParams, window: tuple[float, float] | None = None,
              m_sites: int | None = None) -> EchoResult:
    """Largest local maximum of the return probability inside the echo window.

    The default window is [0.6, 1.4] times the round-trip estimate of
    :func:`echo_round_trip`. The ratio of the detected time to hbar M / B is
    reported alongside.
    """
    m = m_sites or series.meta.get("m_sites") or params.m_sites
    if m is None:
        raise InvalidParameters("echo_time needs the chain length")
    t_rt = echo_round_trip(params, m)
    lo, hi = window if window is not None else (0.6 * t_rt, 1.4 * t_rt)
    t, p = series.times, series.probability
    if t[0] > lo or t[-1] < hi:
        raise ValueError(f"time grid [{t[0]}, {t[-1]}] does not cover the echo window [{lo}, {hi}]")
    inner = np.arange(1, t.size - 1)
    is_max = (p[inner] >= p[inner - 1]) & (p[inner] >= p[inner + 1]) & (t[inner] >= lo) & (t[inner] <= hi)
    idx = inner[is_max]
    if idx.size == 0:
        raise ValueError("no local maximum inside the echo window")
    k = idx[np.argmax(p[idx])]
    return EchoResult(
        time=float(t[k]),
        probability=float(p[k]),
        ratio_to_m_over_b=float(t[k] / (params.hbar * m / params.bandwidth)),
        predicted_round_trip=float(t_rt),
        window=(float(lo), float(hi)),
    )


def converged_reference(params: ChainParams, times, tol: float = 1e-10, m_start: int | None = None,
                        m_cap: int = 16384, backend=None) -> AmplitudeSeries:
    """Semi-infinite P00(t) emulated by doubling M until the curve stops changing.

    The starting size keeps the window end below 0.8 hbar M / B, so the
    reflection from the far end cannot reach site 0. Returns the series at
    the smallest M whose probability agrees with 2M to ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = _check_times(times)
    t_end = float(t.max()) if t.size else 0.0
    need = 1.25 * params.bandwidth * t_end / params.hbar
    m = 64 if m_start is None else int(m_start)
    while m <= need:
        m *= 2
    cur = evolve_finite(params, t, m_sites=m, backend=backend)
    while True:
        if 2 * m > m_cap:
            raise ConvergenceFailure(f"no convergence to {tol} before reaching M cap {m_cap}")
        nxt = evolve_finite(params, t, m_sites=2 * m, backend=backend)
        diff = float(np.max(np.abs(nxt.probability - cur.probability))) if t.size else 0.0
        if diff < tol:
            meta = dict(cur.meta, m_check=2 * m, max_change=diff)
            return AmplitudeSeries(cur.times, cur.amplitude, cur.probability, "diagonalization", meta)
        m, cur = 2 * m, nxt


def envelope_semi_infinite(params: ChainParams, t) -> np.ndarray:
    """Smooth reference curve A e^{-2 gamma0 t} + C (hbar / (Gamma(e_r) t))^3."""
    res = pole_data(params)
    t = np.asarray(t, dtype=float)
    hb = params.hbar
    with np.errstate(divide="ignore"):
        tail = res.tail_C * (hb / (res.gamma_at_er * t)) ** 3
    return res.prefactor_A * np.exp(-2.0 * res.gamma0 * t / hb) + tail


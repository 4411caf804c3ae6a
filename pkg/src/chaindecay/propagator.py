"""Survival amplitude of site 0 on the semi-infinite chain from its spectrum.

Three routes are provided: the Fourier transform of N0 (``p00_fourier``),
the Fourier transform of the autocorrelation J0 (``p00_from_j0``), and the
contour decomposition into the resonance pole and the two band-edge cuts
(``decompose``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from . import kernels
from .exact import AmplitudeSeries
from .model import ChainParams, ConvergenceFailure, NotResonant, require_resonant
from .spectrum import (
    band_rule,
    bound_states,
    ldos_continued,
    ldos_site0,
    pole_data,
    spectral_density_j0,
    SpectralDensity,
)


class QuadratureError(ConvergenceFailure):
    pass


def _times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0):
        raise ValueError("amplitudes are defined for t >= 0 only")
    return t


def p00_fourier(params: ChainParams, times, tol: float = 1e-12, n_start: int = 256,
                n_max: int = 1 << 20, backend=None) -> AmplitudeSeries:
    """Survival amplitude int N0(e) exp(-i e t / hbar) de (+ localized levels).

    The band integral uses the cosine substitution of :func:`band_rule` and
    doubles the node count until two successive estimates agree to ``tol``
    at every requested time.
    """
    t = _times(times)
    tau = t / params.hbar
    b = params.bandwidth
    n = n_start
    eps, w = band_rule(params, n)
    amp = kernels.spectral_sum(eps, w, tau, backend=backend)
    while True:
        if 2 * n > n_max:
            raise QuadratureError(f"band quadrature did not reach {tol} with {n_max} nodes")
        theta = (2 * np.arange(n) + 1) * (np.pi / (2 * n))
        e_new = 0.5 * b * (1.0 - np.cos(theta))
        w_new = ldos_site0(params, e_new) * (0.5 * b * np.sin(theta)) * (np.pi / (2 * n))
        refined = 0.5 * amp + kernels.spectral_sum(e_new, w_new, tau, backend=backend)
        err = float(np.max(np.abs(refined - amp))) if t.size else 0.0
        amp, n = refined, 2 * n
        if err < tol:
            break
    for energy, weight in bound_states(params):
        amp = amp + weight * np.exp(-1j * energy * tau)
    return AmplitudeSeries.from_amplitude(t, amp, "spectral_ft", n_nodes=n - 1, error_estimate=err)


@dataclass(frozen=True)
class J0Probability:
    series: AmplitudeSeries
    imag_residual: np.ndarray
    density: SpectralDensity


def p00_from_j0(params: ChainParams, times, density: SpectralDensity | None = None,
                n_points: int = 2001) -> J0Probability:
    """P00(t) = int J0(w) exp(-i w t) dw, trapezoid rule on the J0 grid.

    The imaginary part of the integral vanishes for an even J0 and is
    returned separately as a diagnostic. J0 here is built from the band
    part of N0 only, so parameters with localized levels are refused.
    """
    if not params.is_resonant:
        raise NotResonant("J0 route covers the band continuum only; localized levels are present")
    t = _times(times)
    dens = spectral_density_j0(params, n_points=n_points) if density is None else density
    om, val = dens.omega, dens.values
    h = np.diff(om)
    wts = np.zeros(om.size)
    wts[:-1] += 0.5 * h
    wts[1:] += 0.5 * h
    vals = kernels.spectral_sum(om, wts * val, t)
    series = AmplitudeSeries(t, None, vals.real.copy(), "spectral_density", {"n_omega": om.size})
    return J0Probability(series, vals.imag.copy(), dens)


@dataclass(frozen=True)
class DecayDecomposition:
    times: np.ndarray
    psi_survival: np.ndarray
    psi_return: np.ndarray

    @property
    def total_amplitude(self) -> np.ndarray:
        return self.psi_survival + self.psi_return

    @property
    def total_probability(self) -> np.ndarray:
        return np.abs(self.total_amplitude) ** 2

    @property
    def interference(self) -> np.ndarray:
        return 2.0 * np.real(np.conj(self.psi_survival) * self.psi_return)

    @property
    def return_phase(self) -> np.ndarray:
        """Unwrapped phase phi(t) of psi_return = |psi_return| exp(i phi)."""
        return np.unwrap(np.angle(self.psi_return))

    @property
    def relative_phase(self) -> np.ndarray:
        """arg(psi_return) - arg(psi_survival), wrapped to (-pi, pi]."""
        return np.angle(self.psi_return * np.conj(self.psi_survival))

    def as_series(self) -> AmplitudeSeries:
        return AmplitudeSeries.from_amplitude(self.times, self.total_amplitude, "pole_plus_cut")


class CutDepthError(ValueError):
    def __init__(self, t_floor: float, cut_depth: float):
        super().__init__(
            f"cut depth {cut_depth} leaves exp(-depth t / hbar) > e^-40 for t < {t_floor}; "
            f"increase cut_depth or restrict to t >= {t_floor}"
        )
        self.t_floor = t_floor
        self.cut_depth = cut_depth


def _panel_rule(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, wx = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * x).ravel(), (0.5 * (b - a) * wx).ravel()


def _cut_rule(umax: float, ufine: float, poles, n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on [0, umax], halving toward 0 down to ``ufine`` and
    toward the real part of each nearby singularity in the u plane."""
    n = max(n_panels, int(np.ceil(np.log2(umax / ufine))) + 4)
    edges = [0.0, *(umax * 2.0 ** np.arange(-n + 1, 1))]
    for w in poles:
        c, d = abs(w.real), abs(w.imag)
        if d >= c or c >= umax:
            continue
        step = d
        while c - step > 0 or c + step < umax:
            edges += [c - step, c + step]
            step *= 2.0
    edges = np.unique(np.clip(edges, 0.0, umax))
    return _panel_rule(edges, order)


def return_amplitude(params: ChainParams, times, cut_depth: float | None = None,
                     n_panels: int = 20, order: int = 24, gamma0: float | None = None) -> np.ndarray:
    """Band-edge cut contribution psi_R(t) to the survival amplitude.

    psi_R(t) = -i int_0^inf dy exp(-y t/hbar) [N0(-i y) - exp(-i B t/hbar) N0(B - i y)],
    integrated in u = sqrt(y) up to y_max = max(40 hbar / t_min, 20 gamma0) (or
    ``cut_depth``). Panels are refined around the image of the resonance pole,
    which sits close to the lower cut when e_r is small compared with gamma0.
    At t = 0 the cut integral is not absolutely convergent; there
    psi_R(0) = 1 - psi_S(0) is used.
    """
    t = _times(times)
    hb = params.hbar
    b = params.bandwidth
    res = pole_data(params)
    if gamma0 is None:
        gamma0 = res.gamma0
    pos = t > 0
    out = np.zeros(t.size, dtype=complex)
    if cut_depth is not None:
        t_floor = 40.0 * hb / cut_depth
        if np.any(pos & (t < t_floor)):
            raise CutDepthError(t_floor, cut_depth)
    tp = t[pos]
    if tp.size == 0:
        return out
    if cut_depth is None:
        ymax = max(40.0 * hb / tp.min(), 20.0 * gamma0)
    else:
        ymax = float(cut_depth)
    # pole images: -i y = e_r - i g0 and B - i y = e_r - i g0
    poles = [np.sqrt(complex(res.gamma0, res.epsilon_r)), np.sqrt(complex(res.gamma0, res.epsilon_r - b))]
    u, wu = _cut_rule(np.sqrt(ymax), np.sqrt(hb / tp.max()), poles, n_panels, order)
    y = u * u
    lower = ldos_continued(params, -1j * y)
    upper = ldos_continued(params, b - 1j * y)
    w = wu * 2.0 * u
    result = np.empty(tp.size, dtype=complex)
    for start in range(0, tp.size, 256):
        tau = tp[start:start + 256, None] / hb
        decay = np.exp(-y[None, :] * tau)
        result[start:start + 256] = -1j * (decay @ (w * lower) - np.exp(-1j * b * tau[:, 0]) * (decay @ (w * upper)))
    out[pos] = result
    return out


def survival_amplitude(params: ChainParams, times) -> np.ndarray:
    res = pole_data(params)
    tau = _times(times) / params.hbar
    return res.residue * np.exp(-(res.gamma0 + 1j * res.epsilon_r) * tau)


def decompose(params: ChainParams, times, cut_depth: float | None = None) -> DecayDecomposition:
    """Split the survival amplitude into the resonance pole and the edge cuts."""
    require_resonant(params)
    t = _times(times)
    res = pole_data(params)
    psi_s = survival_amplitude(params, t)
    psi_r = return_amplitude(params, t, cut_depth=cut_depth, gamma0=res.gamma0)
    psi_r[t == 0] = 1.0 - psi_s[t == 0]
    return DecayDecomposition(t, psi_s, psi_r)


def return_kernel(params: ChainParams, t):
    """Return amplitude to site 1 of the bare chain, 2 e^{-i x} J1(x) / x with x = 2 v t / hbar."""
    t = np.asarray(t, dtype=float)
    x = 2.0 * params.v * t / params.hbar
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 - x * x / 8.0, 2.0 * j1(xs) / xs)
    out = np.exp(-1j * x) * ratio
    return out[()] if out.ndim == 0 else out


def longtime_model(params: ChainParams, t) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic tail of P00 and its period average.

    Returns ``(modulated, averaged)`` where ``modulated`` is
    C [1 - 2 beta/(1 + beta^2) sin(B t/hbar)] (hbar / (Gamma(e_r) t))^3 and
    ``averaged`` is the small-coupling average
    (v0/epsilon0)^2 (gamma0 / (4 pi e_r)) (hbar / (Gamma(e_r) t))^3.
    """
    res = pole_data(params)
    t = np.asarray(t, dtype=float)
    hb = params.hbar
    with np.errstate(divide="ignore"):
        power = (hb / (res.gamma_at_er * t)) ** 3
    contrast = 2.0 * res.beta / (1.0 + res.beta ** 2)
    modulated = res.tail_C * (1.0 - contrast * np.sin(params.bandwidth * t / hb)) * power
    averaged = (params.v0 / params.epsilon0) ** 2 * res.gamma0 / (4.0 * np.pi * res.epsilon_r) * power
    return modulated, averaged


def tail_modulation_frequency(params: ChainParams) -> float:
    return params.bandwidth / params.hbar


def asymptotic_return_phase(params: ChainParams, t) -> np.ndarray:
    """Long-time phase of psi_R(t) from the square-root edge expansion.

    psi_R ~ t^{-3/2} e^{-3 i pi / 4} [1 - i beta e^{-i B t / hbar}], so the
    phase is -3 pi/4 + arg(1 - beta sin(Bt/hbar) - i beta cos(Bt/hbar)).
    """
    res = pole_data(params)
    x = params.bandwidth * np.asarray(t, dtype=float) / params.hbar
    return -0.75 * np.pi + np.arctan2(-res.beta * np.cos(x), 1.0 - res.beta * np.sin(x))


@dataclass(frozen=True)
class ShortTimeMoments:
    mean_energy: float
    energy_variance: float
    energy_second_moment_about_resonance: float | None
    frequency_second_moment: float

    @property
    def quadratic_coefficient(self) -> float:
        """Limit of (1 - P00(t)) / t^2 as t -> 0."""
        return 0.5 * self.frequency_second_moment


def short_time_moments(params: ChainParams, n_quad: int = 4096,
                       density: SpectralDensity | None = None) -> ShortTimeMoments:
    """Second moments controlling the quadratic onset of the decay.

    The energy moments are taken over N0 (including localized levels). The
    frequency moment is taken over J0 when the spectrum is purely continuous;
    otherwise it is the double sum over the full spectral measure, which
    equals twice the energy variance.
    """
    eps, w = band_rule(params, n_quad)
    levels = bound_states(params)
    e_all = np.concatenate([eps, [e for e, _ in levels]])
    w_all = np.concatenate([w, [q for _, q in levels]])
    norm = w_all.sum()
    mean = float(np.sum(w_all * e_all) / norm)
    var = float(np.sum(w_all * (e_all - mean) ** 2) / norm)
    about_r = None
    if params.is_resonant and params.v0 < params.v:
        try:
            er = pole_data(params).epsilon_r
            about_r = float(np.sum(w_all * (e_all - er) ** 2) / norm)
        except ValueError:
            about_r = None
    if levels:
        om2 = 2.0 * var
    else:
        dens = spectral_density_j0(params) if density is None else density
        om2 = dens.moment(2) / dens.integral()
    return ShortTimeMoments(mean, var, about_r, float(om2))

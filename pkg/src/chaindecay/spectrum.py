"""Closed-form spectral quantities of the semi-infinite chain.

All densities are normalized per unit energy. ``ldos_site0`` is the local
density of states on the inhomogeneous site, ``ldos_surface`` the one on the
first site of the bare chain (site 0 removed), and ``ldos_continued`` the
analytic continuation of the former off the real axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .model import ChainParams, require_resonant, NotResonant


def _sqrt_product(z, bandwidth):
    """sqrt(z) * sqrt(B - z) with principal branches.

    Inside the strip 0 < Re z < B neither factor crosses its cut, so this is
    the continuation of the real band function into both half-planes.
    """
    return np.sqrt(z) * np.sqrt(bandwidth - z)


def _dyson_denominator(z, p: ChainParams):
    r2 = (p.v0 / p.v) ** 2
    x = (z - 2.0 * p.v) / 2.0
    return (z - p.epsilon0 - r2 * x) ** 2 + r2 * r2 * (p.v * p.v - x * x)


def ldos_site0(params: ChainParams, eps):
    """Local density of states N0(eps) on site 0; zero outside (0, B).

    Localized states outside the band (non-resonant parameters) are not part
    of this density; see :func:`bound_states`.
    """
    eps = np.asarray(eps, dtype=float)
    b = params.bandwidth
    inside = (eps > 0.0) & (eps < b)
    e = np.where(inside, eps, b / 2.0)
    r2 = (params.v0 / params.v) ** 2
    val = r2 * np.sqrt(e) * np.sqrt(b - e) / (2.0 * np.pi * _dyson_denominator(e, params))
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def group_velocity_scale(params: ChainParams, eps):
    """Gamma(eps) = sqrt(eps) sqrt(B - eps) / 2 inside the band, else 0."""
    eps = np.asarray(eps, dtype=float)
    b = params.bandwidth
    inside = (eps > 0.0) & (eps < b)
    e = np.where(inside, eps, 0.0)
    out = np.where(inside, 0.5 * np.sqrt(e) * np.sqrt(b - e), 0.0)
    return out[()] if out.ndim == 0 else out


def ldos_surface(params: ChainParams, eps):
    """Surface density of states of the bare chain, 16 Gamma(eps) / (pi B^2)."""
    b = params.bandwidth
    return 16.0 / (np.pi * b * b) * group_velocity_scale(params, eps)


def ldos_continued(params: ChainParams, z):
    """Analytic continuation N0(z) of the band density.

    Real arguments are taken as limits from below the axis. The pole pair
    sits at ``epsilon_r -/+ i gamma0``.
    """
    z = np.asarray(z, dtype=complex)
    b = params.bandwidth
    if np.any((z == 0) | (z == b)):
        raise ValueError("N0(z) is not analytic at the band edges 0 and B")
    im = np.where(z.imag == 0, -0.0, z.imag)
    z = np.array(z.real, dtype=complex)
    z.imag = im
    r2 = (params.v0 / params.v) ** 2
    out = r2 * _sqrt_product(z, b) / (2.0 * np.pi * _dyson_denominator(z, params))
    return out[()] if out.ndim == 0 else out


def surface_continued(params: ChainParams, z):
    b = params.bandwidth
    return 16.0 / (np.pi * b * b) * 0.5 * _sqrt_product(np.asarray(z, dtype=complex), b)


@dataclass(frozen=True)
class ResonanceData:
    """Pole-derived constants of a resonant chain.

    ``residue`` is the complex prefactor of the pure-survival amplitude,
    ``Psi_S(t) = residue * exp(-(gamma0 + i epsilon_r) t / hbar)``, i.e.
    ``-2 pi i`` times the residue of N0 at ``epsilon_r - i gamma0``.
    """

    epsilon_r: float
    delta0: float
    gamma0: float
    gamma_c: float
    residue: complex
    prefactor_A: float
    delta_corr: float
    beta: float
    tail_C: float
    gamma_at_er: float

    @property
    def residue_phase(self) -> float:
        """phi_a, defined by residue = |residue| exp(-i phi_a)."""
        return -float(np.angle(self.residue))

    @property
    def pole(self) -> complex:
        return complex(self.epsilon_r, -self.gamma0)

    def as_dict(self) -> dict:
        return {
            "epsilon_r": self.epsilon_r,
            "delta0": self.delta0,
            "gamma0": self.gamma0,
            "gamma_c": self.gamma_c,
            "residue_re": self.residue.real,
            "residue_im": self.residue.imag,
            "residue_phase": self.residue_phase,
            "prefactor_A": self.prefactor_A,
            "delta_corr": self.delta_corr,
            "beta": self.beta,
            "tail_C": self.tail_C,
            "gamma_at_er": self.gamma_at_er,
        }


def edge_weight_ratio(epsilon_r: float, gamma0: float, bandwidth: float) -> float:
    """Relative weight of the Lorentzian at the upper versus lower band edge."""
    return (epsilon_r ** 2 + gamma0 ** 2) / ((bandwidth - epsilon_r) ** 2 + gamma0 ** 2)


def pole_data(params: ChainParams) -> ResonanceData:
    require_resonant(params)
    v, v0, e0 = params.v, params.v0, params.epsilon0
    b = params.bandwidth
    ratio = v0 * v0 / (v * v - v0 * v0)
    half_detuning = (e0 - 2.0 * v) / 2.0
    gc2 = v * v - v0 * v0 - half_detuning ** 2
    if gc2 <= 0.0:
        raise NotResonant(
            "Dyson denominator has real roots (v^2 - v0^2 <= ((epsilon0 - 2v)/2)^2): "
            "no complex resonance pole"
        )
    delta0 = ratio * half_detuning
    er = e0 + delta0
    if not 0.0 < er < b:
        raise NotResonant(f"resonance energy {er} lies outside the band")
    gc = np.sqrt(gc2)
    g0 = ratio * gc
    zp = complex(er, -g0)
    residue = complex(8.0 * v * v / (gc * b * b) * _sqrt_product(zp, b))
    amp = np.sqrt(er ** 2 + g0 ** 2) * np.sqrt((b - er) ** 2 + g0 ** 2) / (4.0 * gc * gc)
    beta = edge_weight_ratio(er, g0, b)
    gam_r = 0.5 * np.sqrt(er) * np.sqrt(b - er)
    tail_c = gam_r ** 3 * v / (4.0 * np.pi * gc * gc) * g0 ** 2 / (g0 ** 2 + er ** 2) ** 2 * (1.0 + beta ** 2)
    delta = 2.0 / np.pi * g0 / er * b / (b - er)
    return ResonanceData(
        epsilon_r=float(er),
        delta0=float(delta0),
        gamma0=float(g0),
        gamma_c=float(gc),
        residue=residue,
        prefactor_A=float(amp),
        delta_corr=float(delta),
        beta=float(beta),
        tail_C=float(tail_c),
        gamma_at_er=float(gam_r),
    )


def lorentzian_factorization(params: ChainParams, eps, res: ResonanceData | None = None):
    """N0 written as (v^2 / gamma_c) * Lorentzian(epsilon_r, gamma0) * surface DoS."""
    res = pole_data(params) if res is None else res
    eps = np.asarray(eps, dtype=float)
    lor = res.gamma0 / ((res.epsilon_r - eps) ** 2 + res.gamma0 ** 2)
    return params.v ** 2 / res.gamma_c * lor * ldos_surface(params, eps)


def lorentzian_factorization_check(params: ChainParams, eps) -> float:
    """Relative residual between N0 and its Lorentzian factorization at ``eps``.

    At points where N0 vanishes (band edges and outside) the absolute
    difference is returned instead.
    """
    direct = ldos_site0(params, eps)
    fact = lorentzian_factorization(params, eps)
    if direct == 0.0:
        return float(abs(direct - fact))
    return float(abs(direct - fact) / direct)


def fgr_rate(params: ChainParams, epsilon_r: float) -> float:
    """Golden-rule width pi v0^2 N1(epsilon_r)."""
    return float(np.pi * params.v0 ** 2 * ldos_surface(params, epsilon_r))


def _surface_g(params: ChainParams, e: float) -> float:
    """Real surface Green's function of the bare chain outside the band."""
    v = params.v
    x = e - 2.0 * v
    return (x - np.sign(x) * np.sqrt(max(x * x - 4.0 * v * v, 0.0))) / (2.0 * v * v)


def _surface_g_prime(params: ChainParams, e: float) -> float:
    v = params.v
    x = e - 2.0 * v
    root = np.sqrt(x * x - 4.0 * v * v)
    return (1.0 - np.sign(x) * x / root) / (2.0 * v * v)


def bound_states(params: ChainParams) -> list[tuple[float, float]]:
    """Localized levels outside [0, B] and their weight on site 0.

    Empty when the parameters are resonant. Each level solves
    E - epsilon0 - v0^2 g1(E) = 0 with g1 the surface Green's function.
    """
    p = params
    v02 = p.v0 ** 2
    b = p.bandwidth

    def f(e):
        return e - p.epsilon0 - v02 * _surface_g(p, e)

    out = []
    if f(0.0) > 0.0:
        lo = min(p.epsilon0 - v02 / p.v, 0.0) - p.v
        e = brentq(f, lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        out.append(e)
    if f(b) < 0.0:
        hi = max(p.epsilon0 + v02 / p.v, b) + p.v
        e = brentq(f, b, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        out.append(e)
    return [(float(e), float(1.0 / (1.0 - v02 * _surface_g_prime(p, e)))) for e in out]


def band_rule(params: ChainParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integrals of N0(eps) * smooth(eps) over the band.

    Uses eps = (B/2)(1 - cos theta); the transformed integrand is smooth and
    even about theta = 0 and pi, so the trapezoid rule on n intervals
    converges geometrically. Endpoint nodes carry zero weight and are dropped,
    so doubling n reuses every previous node.
    """
    b = params.bandwidth
    theta = np.arange(1, n) * (np.pi / n)
    eps = 0.5 * b * (1.0 - np.cos(theta))
    w = ldos_site0(params, eps) * (0.5 * b * np.sin(theta)) * (np.pi / n)
    return eps, w


def band_integral(params: ChainParams, func=None, n: int = 4096, tol: float = 1e-12,
                  n_max: int = 1 << 22) -> float:
    """Integral over the band of N0(eps) * func(eps) (func defaults to 1).

    Starts from ``n`` intervals and doubles until successive values agree to
    ``tol``; narrow resonances need more nodes than broad ones.
    """
    def total(m):
        eps, w = band_rule(params, m)
        return float(np.sum(w if func is None else w * func(eps)))

    prev = total(n)
    while 2 * n <= n_max:
        n *= 2
        cur = total(n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise ArithmeticError(f"band integral not converged to {tol} with {n} intervals")


def surface_integral(params: ChainParams, n: int = 4096) -> float:
    b = params.bandwidth
    theta = np.arange(1, n) * (np.pi / n)
    eps = 0.5 * b * (1.0 - np.cos(theta))
    return float(np.sum(ldos_surface(params, eps) * 0.5 * b * np.sin(theta)) * np.pi / n)


@dataclass(frozen=True)
class LdosCurve:
    energies: np.ndarray
    values: np.ndarray
    kind: str

    def integral(self) -> float:
        """Trapezoid rule with the sqrt-edge correction -zeta(-1/2) g h^{3/2} at both ends."""
        e, f = self.energies, self.values
        h = e[1] - e[0]
        g = (f[1] + f[-2]) / np.sqrt(h)
        return float(np.trapezoid(f, e) - zeta(-0.5) * g * h ** 1.5)


def ldos_curve(params: ChainParams, n_points: int = 2001, kind: str = "site0") -> LdosCurve:
    eps = np.linspace(0.0, params.bandwidth, n_points)
    if kind == "site0":
        vals = ldos_site0(params, eps)
    elif kind == "surface_site1":
        vals = ldos_surface(params, eps)
    else:
        raise ValueError(f"unknown LDoS kind {kind!r}")
    return LdosCurve(eps, np.asarray(vals, dtype=float), kind)


@dataclass(frozen=True)
class SpectralDensity:
    omega: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.omega))

    def moment(self, k: int) -> float:
        return float(np.trapezoid(self.values * self.omega ** k, self.omega))


def spectral_density_j0(params: ChainParams, omega=None, n_points: int = 2001,
                        n_quad: int = 2048) -> SpectralDensity:
    """Autocorrelation J0(w) = hbar * int N0(e) N0(e + hbar w) de on a frequency grid.

    The integral runs over the overlap [a, b] of the two band copies with
    e = a + (b - a)(1 - cos theta)/2, which tames the square-root edges.
    """
    hb = params.hbar
    bw = params.bandwidth
    if omega is None:
        omega = np.linspace(-bw / hb, bw / hb, n_points)
    omega = np.asarray(omega, dtype=float)
    theta = (np.arange(n_quad) + 0.5) * (np.pi / n_quad)
    u = 0.5 * (1.0 - np.cos(theta))
    du = 0.5 * np.sin(theta) * (np.pi / n_quad)
    out = np.zeros(omega.size)
    shift = hb * omega
    lo = np.maximum(0.0, -shift)
    hi = np.minimum(bw, bw - shift)
    ok = hi > lo
    for start in range(0, omega.size, 256):
        sl = slice(start, start + 256)
        m = ok[sl]
        if not np.any(m):
            continue
        a = lo[sl][m][:, None]
        length = (hi[sl] - lo[sl])[m][:, None]
        e = a + length * u[None, :]
        f = ldos_site0(params, e) * ldos_site0(params, e + shift[sl][m][:, None])
        block = out[sl]
        block[m] = hb * np.sum(f * du[None, :], axis=1) * length[:, 0]
        out[sl] = block
    return SpectralDensity(omega, out)

"""Crossover times, regime fits and survival-collapse detection."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares
from scipy.signal import lombscargle

from .exact import AmplitudeSeries
from .model import ChainParams, require_resonant
from .propagator import decompose
from .spectrum import ResonanceData, ldos_surface, pole_data


def t_short(params: ChainParams) -> tuple[float, float]:
    """Spreading time t_S: (closest approach of the quadratic and exponential
    branches, hbar pi N1(e_r) estimate)."""
    res = pole_data(params)
    hb = params.hbar
    a, g0 = res.prefactor_A, res.gamma0
    exact = hb * g0 * a / (params.v0 ** 2 + 2.0 * g0 * g0 * a)
    approx = hb * np.pi * float(ldos_surface(params, res.epsilon_r))
    return float(exact), float(approx)


def t_return(params: ChainParams, n_iter: int = 3, rtol: float = 0.01, max_iter: int = 8) -> list[float]:
    """Fixed-point iterates for the exponential/power-law crossover time t_R.

    t0 = (hbar/gamma0) ln(2 sqrt(pi) (e0/v0) sqrt(e_r/gamma0)) and
    t_{n+1} = t0 + (3 hbar / (2 gamma0)) ln(Gamma(e_r) t_n / hbar).
    Runs ``n_iter`` steps, then continues up to ``max_iter`` while the
    relative change exceeds ``rtol``.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    res = pole_data(params)
    hb, g0 = params.hbar, res.gamma0
    arg0 = 2.0 * np.sqrt(np.pi) * params.epsilon0 / params.v0 * np.sqrt(res.epsilon_r / g0)
    if arg0 <= 0:
        raise ValueError("log argument of the zeroth iterate is not positive (epsilon0 <= 0)")
    base = hb / g0 * np.log(arg0)
    out = [float(base)]
    n = 0
    while n < max(n_iter, 1) or (n < max_iter and abs(out[-1] - out[-2]) > rtol * abs(out[-1])):
        arg = res.gamma_at_er * out[-1] / hb
        if arg <= 0:
            raise ValueError(f"log argument Gamma(e_r) t / hbar = {arg} is not positive")
        out.append(float(base + 1.5 * hb / g0 * np.log(arg)))
        n += 1
    return out


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    prefactor: float
    window: tuple[float, float]
    n_samples: int
    residual_rms: float
    anomalous: bool


def fit_exponential(series: AmplitudeSeries, window: tuple[float, float], hbar: float = 1.0) -> ExponentialFit:
    """Least squares of ln P against t; rate = -slope hbar / 2.

    ``anomalous`` flags a residual spike well above the typical residual,
    which is what a collapse dip or an echo inside the window produces.
    """
    t0, t1 = window
    m = (series.times >= t0) & (series.times <= t1)
    if m.sum() < 20:
        raise ValueError(f"need at least 20 samples in {window}, got {int(m.sum())}")
    t, p = series.times[m], series.probability[m]
    if np.any(p <= 0):
        raise ValueError("probability must be positive inside the fit window")
    slope, icpt = np.polyfit(t, np.log(p), 1)
    resid = np.log(p) - (slope * t + icpt)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    med = float(np.median(np.abs(resid)))
    anomalous = bool(np.max(np.abs(resid)) > max(1.0, 8.0 * med))
    return ExponentialFit(float(-slope * hbar / 2.0), float(np.exp(icpt)), (float(t0), float(t1)),
                          int(m.sum()), rms, anomalous)


def period_average(series: AmplitudeSeries, window: tuple[float, float], period: float,
                   mode: str = "sliding"):
    """Average P over one period.

    ``mode="aligned"`` averages consecutive whole periods starting at
    window[0] (the trailing partial period is dropped). ``mode="sliding"``
    is a boxcar moving average evaluated at every grid time whose full
    period lies inside the window, so the result does not depend on where
    the first period starts. Returns (centers, averages).
    """
    t0, t1 = window
    t, p = series.times, series.probability
    if t1 - t0 < period:
        raise ValueError("window shorter than one period")
    if t[0] > t0 or t[-1] < t1 - 1e-12 * max(1.0, abs(t1)):
        raise ValueError("series does not cover the averaging window")
    dt = np.median(np.diff(t))
    if period / dt < 8:
        raise ValueError("grid too coarse for period averaging (< 8 samples per period)")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(t))])

    def integral(x):
        return np.interp(x, t, cum)

    if mode == "aligned":
        k = int(np.floor((t1 - t0) / period + 1e-9))
        a = t0 + period * np.arange(k)
    elif mode == "sliding":
        a = t[(t >= t0) & (t <= t1 - period)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return a + 0.5 * period, (integral(a + period) - integral(a)) / period


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    modulation_freq: float
    contrast: float
    beta_estimate: float
    window: tuple[float, float]
    n_periods: int
    residual_rms: float


def _contrast_to_beta(c: float) -> float:
    c = min(abs(c), 1.0)
    if c == 0.0:
        return 0.0
    return float((1.0 - np.sqrt(1.0 - c * c)) / c)


def fit_powerlaw(series: AmplitudeSeries, window: tuple[float, float], params: ChainParams,
                 averaging: str = "sliding") -> PowerLawFit:
    """Power-law exponent, modulation frequency and edge-weight ratio of the tail.

    The exponent comes from a log-log regression of period-averaged P (period
    2 pi hbar / B, see :func:`period_average` for ``averaging``). The oscillation of P / fit - 1 is then fitted with a
    single sinusoid whose frequency is seeded from the periodogram peak.
    """
    period = 2.0 * np.pi * params.hbar / params.bandwidth
    t0, t1 = window
    if (t1 - t0) < 3.0 * period:
        raise ValueError("window shorter than three modulation periods")
    centers, avgs = period_average(series, window, period, averaging)
    slope, icpt = np.polyfit(np.log(centers), np.log(avgs), 1)
    m = (series.times >= t0) & (series.times <= t1)
    t, p = series.times[m], series.probability[m]
    trend = np.exp(icpt) * t ** slope
    r = p / trend - 1.0

    length = t[-1] - t[0]
    dt = np.median(np.diff(t))
    # scan up to 4 B / hbar, resolving a quarter of the spectral peak width
    w_hi = min(np.pi / dt, 4.0 * params.bandwidth / params.hbar)
    w_lo = 4.0 * np.pi / length
    omegas = np.linspace(w_lo, w_hi, int(np.ceil((w_hi - w_lo) * 2.0 * length / np.pi)) + 1)
    power = lombscargle(t, r - r.mean(), omegas)
    w0 = omegas[np.argmax(power)]

    def model(x):
        a, b, c, w = x
        return a * np.sin(w * t) + b * np.cos(w * t) + c - r

    lin = np.column_stack([np.sin(w0 * t), np.cos(w0 * t), np.ones_like(t)])
    a0, b0, c0 = np.linalg.lstsq(lin, r, rcond=None)[0]
    sol = least_squares(model, [a0, b0, c0, w0], x_scale="jac")
    a, b, c, w = sol.x
    contrast = float(np.hypot(a, b))
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return PowerLawFit(float(slope), float(np.exp(icpt)), float(abs(w)), contrast,
                       _contrast_to_beta(contrast), (float(t0), float(t1)),
                       int(np.floor((t1 - t0) / period + 1e-9)), rms)


@dataclass(frozen=True)
class CollapseResult:
    detected: bool
    dip_time: float
    dip_probability: float
    dip_depth: float
    envelope: float
    phase_residual: float
    amplitude_ratio: float
    bracket: tuple[float, float]


def collapse_envelope(res: ResonanceData, t, hbar: float = 1.0):
    """Geometric mean of the exponential and (period-averaged) power-law branches."""
    t = np.asarray(t, dtype=float)
    expo = res.prefactor_A * np.exp(-2.0 * res.gamma0 * t / hbar)
    tail = res.tail_C * (hbar / (res.gamma_at_er * t)) ** 3
    return np.sqrt(expo * tail)


def _refine_minimum(series: AmplitudeSeries, k: int) -> tuple[float, float]:
    t = series.times
    lo, hi = max(k - 4, 0), min(k + 5, t.size)
    if series.amplitude is None or hi - lo < 4:
        return float(t[k]), float(series.probability[k])
    tt = t[lo:hi]
    amp = series.amplitude[lo:hi]
    spline_re = CubicSpline(tt, amp.real)
    spline_im = CubicSpline(tt, amp.imag)
    a = t[max(k - 1, 0)]
    b = t[min(k + 1, t.size - 1)]
    fine = np.linspace(a, b, 2001)
    pf = spline_re(fine) ** 2 + spline_im(fine) ** 2
    j = int(np.argmin(pf))
    return float(fine[j]), float(min(pf[j], series.probability[k]))


def detect_collapse(series: AmplitudeSeries, params: ChainParams, resonance: ResonanceData | None = None,
                    t_r: float | None = None, bracket: tuple[float, float] | None = None) -> CollapseResult:
    """Locate the survival-collapse dip near t_R and test the antiphase condition.

    The dip is the minimum of P in [0.5 t_R, 2 t_R], refined on a cubic
    interpolant of the complex amplitude when one is available. Its depth is
    measured against :func:`collapse_envelope`. ``phase_residual`` is the
    distance of arg(psi_R) - arg(psi_S) at the dip from an odd multiple of pi.
    A dip no deeper than half the envelope is reported with detected=False.
    """
    require_resonant(params)
    res = pole_data(params) if resonance is None else resonance
    if t_r is None:
        t_r = t_return(params)[-1]
    lo, hi = bracket if bracket is not None else (0.5 * t_r, 2.0 * t_r)
    t = series.times
    m = np.flatnonzero((t >= lo) & (t <= hi))
    if m.size < 3:
        raise ValueError(f"series does not resolve the collapse bracket [{lo}, {hi}]")
    k = int(m[np.argmin(series.probability[m])])
    t_dip, p_dip = _refine_minimum(series, k)
    env = float(collapse_envelope(res, t_dip, params.hbar))
    depth = env / p_dip if p_dip > 0 else np.inf
    dec = decompose(params, [t_dip])
    rel = float(dec.relative_phase[0])
    residual = float(abs(np.angle(np.exp(1j * (rel - np.pi)))))
    ratio = float(abs(dec.psi_return[0]) / abs(dec.psi_survival[0]))
    return CollapseResult(
        detected=bool(p_dip < 0.5 * env),
        dip_time=t_dip,
        dip_probability=p_dip,
        dip_depth=float(depth),
        envelope=env,
        phase_residual=residual,
        amplitude_ratio=ratio,
        bracket=(float(lo), float(hi)),
    )


BRANCHES = ("quadratic", "exponential", "power_law")


def piecewise_model(params: ChainParams, t) -> tuple[np.ndarray, np.ndarray]:
    """Three-branch approximation of P00(t); returns (values, branch names)."""
    res = pole_data(params)
    ts = t_short(params)[0]
    tr = t_return(params)[-1]
    hb = params.hbar
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.size)
    branch = np.empty(t.size, dtype=object)
    q = t < ts
    e = (t >= ts) & (t < tr)
    w = t >= tr
    out[q] = 1.0 - (params.v0 * t[q] / hb) ** 2
    out[e] = res.prefactor_A * np.exp(-2.0 * res.gamma0 * t[e] / hb)
    contrast = 2.0 * res.beta / (1.0 + res.beta ** 2)
    out[w] = res.tail_C * (1.0 - contrast * np.sin(params.bandwidth * t[w] / hb)) * (hb / (res.gamma_at_er * t[w])) ** 3
    branch[q], branch[e], branch[w] = BRANCHES
    return out, branch


@dataclass
class RegimeReport:
    t_s: float
    t_s_approx: float
    t_r_iterations: list[float]
    t_r: float
    fitted_gamma0: float | None = None
    fitted_prefactor: float | None = None
    exponential_fit: dict | None = None
    powerlaw_exponent: float | None = None
    modulation_freq: float | None = None
    beta_estimate: float | None = None
    powerlaw_fit: dict | None = None
    dip_time: float | None = None
    dip_depth: float | None = None
    dip_probability: float | None = None
    phase_residual: float | None = None
    collapse_detected: bool | None = None
    echo_time: float | None = None
    resonance: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    def tsv_row(self) -> list:
        return [getattr(self, k) for k in TSV_FIELDS]


TSV_FIELDS = ("t_s", "t_r", "fitted_gamma0", "fitted_prefactor", "powerlaw_exponent",
              "modulation_freq", "beta_estimate", "dip_time", "dip_depth", "dip_probability",
              "phase_residual")


def analyze(params: ChainParams, series: AmplitudeSeries, exp_window: tuple[float, float] | None = None,
            pow_window: tuple[float, float] | None = None, echo_time: float | None = None) -> RegimeReport:
    """Run every regime diagnostic on a P00 series and collect the results.

    Default windows are the full SC-FGR regime (t_S, t_R) for the exponential
    fit and [1.5 t_R, t_end] for the power law, where t_end stops short of
    the echo when ``echo_time`` is given. A diagnostic that cannot run on
    the supplied series leaves its fields as None and records the reason in
    ``failures``.
    """
    res = pole_data(params)
    ts, ts_approx = t_short(params)
    iters = t_return(params)
    tr = iters[-1]
    report = RegimeReport(
        t_s=ts, t_s_approx=ts_approx, t_r_iterations=iters, t_r=tr, echo_time=echo_time,
        resonance=res.as_dict(),
        params={"epsilon0": params.epsilon0, "v0": params.v0, "v": params.v,
                "m_sites": params.m_sites, "hbar": params.hbar},
    )
    if exp_window is None:
        exp_window = (ts, tr)
    if pow_window is None:
        t_end = float(series.times[-1])
        if echo_time is not None:
            t_end = min(t_end, 0.6 * echo_time)
        pow_window = (1.5 * tr, t_end)
    try:
        ef = fit_exponential(series, exp_window, params.hbar)
        report.fitted_gamma0, report.fitted_prefactor = ef.rate, ef.prefactor
        report.exponential_fit = asdict(ef)
    except ValueError as exc:
        report.failures["exponential_fit"] = str(exc)
    try:
        pf = fit_powerlaw(series, pow_window, params)
        report.powerlaw_exponent, report.modulation_freq = pf.exponent, pf.modulation_freq
        report.beta_estimate, report.powerlaw_fit = pf.beta_estimate, asdict(pf)
    except ValueError as exc:
        report.failures["powerlaw_fit"] = str(exc)
    try:
        col = detect_collapse(series, params, res, tr)
        report.dip_time, report.dip_depth = col.dip_time, col.dip_depth
        report.dip_probability, report.phase_residual = col.dip_probability, col.phase_residual
        report.collapse_detected = col.detected
    except ValueError as exc:
        report.failures["collapse"] = str(exc)
    return report

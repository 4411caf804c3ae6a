"""Command-line front end: ldos, decay, regimes and sweep subcommands.

Exit codes: 0 success, 1 I/O error, 2 invalid parameters, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import exact, io, kernels, regimes, spectrum
from .model import ConvergenceFailure, InvalidParameters, make_params
from .propagator import decompose, p00_fourier

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2, 3
LDOS_POINTS = 2001
COMPLEX_GRID = (201, 101)
COMPLEX_DEPTH = 1.0
REGIME_DT = 0.01


def _resonance_info(params) -> dict:
    info = {
        "epsilon0": params.epsilon0,
        "v0": params.v0,
        "v": params.v,
        "is_resonant": params.is_resonant,
        "criterion_margin": 2.0 * params.v - params.v0 ** 2 / params.v - abs(params.epsilon0 - 2.0 * params.v),
        "bound_states": [{"energy": e, "weight": w} for e, w in spectrum.bound_states(params)],
        "pole": None,
    }
    if params.is_resonant and params.v0 < params.v:
        try:
            res = spectrum.pole_data(params)
            info["pole"] = res.as_dict()
            info["fgr_rate"] = spectrum.fgr_rate(params, res.epsilon_r)
        except InvalidParameters as exc:
            info["pole_error"] = str(exc)
    return info


def cmd_ldos(cfg: io.RunConfig) -> dict:
    p = cfg.params
    out = io.ensure_dir(cfg.output_dir)
    curve = spectrum.ldos_curve(p, LDOS_POINTS)
    io.write_csv(out / "ldos.csv", ["epsilon", "value"], [curve.energies, curve.values])
    ne, ny = COMPLEX_GRID
    eps = np.linspace(0.0, p.bandwidth, ne)
    depth = np.linspace(0.0, COMPLEX_DEPTH * p.v, ny)
    ee, yy = np.meshgrid(eps, depth, indexing="ij")
    vals = np.empty(ee.shape)
    vals[:, 0] = np.abs(spectrum.ldos_site0(p, eps))
    vals[:, 1:] = np.abs(spectrum.ldos_continued(p, ee[:, 1:] - 1j * yy[:, 1:]))
    io.write_csv(out / "ldos_complex.csv", ["epsilon", "epsilon_imag", "abs_value"],
                 [ee.ravel(), -yy.ravel(), vals.ravel()])
    dens = spectrum.spectral_density_j0(p)
    io.write_csv(out / "j0.csv", ["omega", "value"], [dens.omega, dens.values])
    info = _resonance_info(p)
    io.write_json(out / "resonance.json", info)
    bound = sum(w for _, w in spectrum.bound_states(p))
    check = {"ldos_integral": curve.integral(), "bound_state_weight": bound,
             "normalization_error": curve.integral() + bound - 1.0,
             "j0_integral": dens.integral()}
    io.write_sidecar(out, "ldos", check)
    return check


def _diag_series(cfg: io.RunConfig, t):
    p = cfg.params
    if p.m_sites is not None:
        return exact.evolve_finite(p, t)
    return exact.converged_reference(p, t, tol=cfg.tolerances["convergence_tol"])


def _write_series(path: Path, s) -> None:
    amp = s.amplitude if s.amplitude is not None else np.full(s.times.size, np.nan + 0j)
    io.write_csv(path, ["t", "re_amp", "im_amp", "p"], [s.times, amp.real, amp.imag, s.probability])


def _echo_info(p, series) -> dict:
    m = series.meta.get("m_sites") or p.m_sites
    try:
        echo = exact.echo_time(series, p, m_sites=m)
    except (ValueError, InvalidParameters) as exc:
        return {"detected": False, "reason": str(exc)}
    info = asdict(echo)
    try:
        env = float(exact.envelope_semi_infinite(p, echo.time))
        info["envelope"] = env
        info["revival_over_envelope"] = echo.probability / env
        info["detected"] = bool(echo.probability >= 10.0 * env)
    except InvalidParameters:
        info["detected"] = True
    return info


def cmd_decay(cfg: io.RunConfig) -> dict:
    p = cfg.params
    out = io.ensure_dir(cfg.output_dir)
    t = cfg.times()
    meta: dict = {"method": cfg.method, "n_times": int(t.size), "t_max": cfg.t_max}
    series = {}
    if cfg.method in ("diag", "both"):
        s = _diag_series(cfg, t)
        series["diag"] = s
        meta["diag"] = dict(s.meta)
        if p.m_sites is not None:
            meta["echo"] = _echo_info(p, s)
    if cfg.method in ("fourier", "both"):
        s = p00_fourier(p, t, tol=cfg.tolerances["quadrature_tol"])
        series["fourier"] = s
        meta["fourier"] = dict(s.meta)
    for name, s in series.items():
        _write_series(out / f"decay_{name}.csv", s)
    if cfg.method == "both":
        diff = np.abs(series["diag"].probability - series["fourier"].probability)
        io.write_csv(out / "decay_diff.csv", ["t", "abs_diff_p"], [t, diff])
        meta["max_abs_diff"] = float(diff.max())
    io.write_sidecar(out, "decay", meta)
    return meta


def _regime_series(cfg: io.RunConfig, t_r: float):
    p = cfg.params
    if cfg.series_file is not None:
        return io.read_series(cfg.series_file), None
    # at least 40 modulation periods of tail past 1.5 t_R
    period = 2.0 * np.pi * p.hbar / p.bandwidth
    t_end = max(cfg.t_max, 4.0 * t_r, 1.5 * t_r + 40.0 * period)
    echo_t = None
    if p.m_sites is not None:
        t_end = max(cfg.t_max, 1.5 * exact.echo_round_trip(p, p.m_sites))
    dt = min(REGIME_DT, cfg.t_max / (cfg.grid_points - 1) if cfg.t_max > 0 else REGIME_DT)
    t = np.linspace(0.0, t_end, int(np.ceil(t_end / dt)) + 1)
    if p.m_sites is not None:
        s = exact.evolve_finite(p, t)
        info = _echo_info(p, s)
        if info.get("detected"):
            echo_t = info["time"]
    else:
        s = p00_fourier(p, t, tol=cfg.tolerances["quadrature_tol"])
    return s, echo_t


def cmd_regimes(cfg: io.RunConfig) -> regimes.RegimeReport:
    p = cfg.params
    out = io.ensure_dir(cfg.output_dir)
    spectrum.pole_data(p)  # raises NotResonant with the localized-state criterion
    t_r = regimes.t_return(p)[-1]
    s, echo_t = _regime_series(cfg, t_r)
    report = regimes.analyze(p, s, cfg.exp_window, cfg.pow_window, echo_t)
    io.write_json(out / "regimes.json", report.as_dict())
    io.write_tsv(out / "regimes.tsv", list(regimes.TSV_FIELDS), [report.tsv_row()])
    dec = decompose(p, s.times)
    io.write_csv(out / "decomposition.csv",
                 ["t", "re_psiS", "im_psiS", "re_psiR", "im_psiR", "p_total", "interference", "phi_return"],
                 [dec.times, dec.psi_survival.real, dec.psi_survival.imag, dec.psi_return.real,
                  dec.psi_return.imag, dec.total_probability, dec.interference, dec.return_phase])
    io.write_sidecar(out, "regimes", {"n_times": int(s.times.size), "source": s.source_tag,
                                      "series_meta": dict(s.meta)})
    return report


SWEEP_FIELDS = ("epsilon0", "v0", "is_resonant", "epsilon_r", "gamma0", "gamma_fgr", "fgr_ratio",
                "prefactor_A", "beta", "t_s", "t_r", "n_bound_states", "error")


def sweep_point(epsilon0: float, v0: float, v: float = 1.0, hbar: float = 1.0) -> dict:
    """One sweep row; pole fields are left empty when no resonance exists."""
    row: dict = {k: None for k in SWEEP_FIELDS}
    row.update(epsilon0=epsilon0, v0=v0)
    try:
        p = make_params(epsilon0, v0, v, None, hbar)
        row["is_resonant"] = p.is_resonant
        row["n_bound_states"] = len(spectrum.bound_states(p))
        if p.is_resonant:
            res = spectrum.pole_data(p)
            fgr = spectrum.fgr_rate(p, res.epsilon_r)
            row.update(epsilon_r=res.epsilon_r, gamma0=res.gamma0, gamma_fgr=fgr,
                       fgr_ratio=res.gamma0 / fgr, prefactor_A=res.prefactor_A, beta=res.beta,
                       t_s=regimes.t_short(p)[0], t_r=regimes.t_return(p)[-1])
    except (ValueError, ArithmeticError, ConvergenceFailure) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(cfg: io.RunConfig) -> list[dict]:
    p = cfg.params
    out = io.ensure_dir(cfg.output_dir)
    e_grid = cfg.epsilon0_grid or (0.2, 3.8, 19)
    v_grid = cfg.v0_grid or (0.1, 0.9, 9)
    e_vals = np.linspace(*e_grid[:2], int(e_grid[2]))
    v_vals = np.linspace(*v_grid[:2], int(v_grid[2]))
    if np.any(v_vals <= 0) or np.any(v_vals >= p.v):
        raise InvalidParameters(f"sweep needs 0 < v0 < v = {p.v}")
    points = [(float(e), float(w)) for e in e_vals for w in v_vals]
    with ThreadPoolExecutor(max_workers=kernels.num_threads()) as pool:
        rows = list(pool.map(lambda ew: sweep_point(ew[0], ew[1], p.v, p.hbar), points))
    io.write_tsv(out / "sweep.tsv", list(SWEEP_FIELDS), [[r[k] for k in SWEEP_FIELDS] for r in rows])
    if cfg.wants("json"):
        io.write_json(out / "sweep.json", rows)
    n_res = sum(1 for r in rows if r["is_resonant"])
    io.write_sidecar(out, "sweep", {"n_points": len(rows), "n_resonant": n_res,
                                    "epsilon0_grid": list(e_grid), "v0_grid": list(v_grid)})
    return rows


COMMANDS = {"ldos": cmd_ldos, "decay": cmd_decay, "regimes": cmd_regimes, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file; flags override it")
    common.add_argument("--epsilon0", type=float, help="site-0 energy (units of v)")
    common.add_argument("--v0", type=float, help="site-0 hopping (units of v)")
    common.add_argument("--v", type=float, help="bulk hopping")
    common.add_argument("--m-sites", type=int, help="finite chain length (omit for semi-infinite)")
    common.add_argument("--t-max", type=float, help="end of the time window (hbar/v)")
    common.add_argument("--grid-points", type=int, help="number of time samples")
    common.add_argument("--method", choices=io.METHODS, help="decay path")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", help="comma-separated subset of csv,json")
    common.add_argument("--exp-window", help="exponential fit window 'a,b'")
    common.add_argument("--pow-window", help="power-law fit window 'a,b'")
    common.add_argument("--series", type=Path, help="regimes: analyze this CSV (t,p or t,re_amp,im_amp)")
    common.add_argument("--epsilon0-grid", help="sweep: start:stop:count")
    common.add_argument("--v0-grid", help="sweep: start:stop:count")

    ap = argparse.ArgumentParser(prog="chaindecay",
                                 description="Survival probability of a site on a semi-infinite tight-binding chain")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("ldos", parents=[common], help="local density of states and resonance data")
    sub.add_parser("decay", parents=[common], help="P00(t) by diagonalization and/or Fourier transform")
    sub.add_parser("regimes", parents=[common], help="crossover times, fits and survival collapse")
    sub.add_parser("sweep", parents=[common], help="resonance landscape over (epsilon0, v0)")
    return ap


def config_from_args(args: argparse.Namespace) -> io.RunConfig:
    values: dict = io.parse_config(args.config) if args.config else {}
    keys = ("epsilon0", "v0", "v", "m_sites", "t_max", "grid_points", "method", "out", "format",
            "exp_window", "pow_window", "series", "epsilon0_grid", "v0_grid")
    for k in keys:
        val = getattr(args, k, None)
        if val is not None:
            values[k] = val
    return io.build_config(values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](cfg)
    except InvalidParameters as exc:
        print(f"chaindecay {args.command}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceFailure as exc:
        print(f"chaindecay {args.command}: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"chaindecay {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

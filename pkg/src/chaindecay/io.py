"""Run configuration and deterministic CSV/JSON export."""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exact import AmplitudeSeries
from .model import ChainParams, InvalidParameters, make_params

FORMATS = ("csv", "json")
METHODS = ("diag", "fourier", "both")


def fmt(x) -> str:
    """17 significant digits for floats; empty cell for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: list[str], columns) -> Path:
    """Write equal-length columns as comma-separated text with LF endings."""
    path = Path(path)
    cols = [np.atleast_1d(np.asarray(c)) for c in columns]
    n = cols[0].size if cols else 0
    if any(c.size != n for c in cols):
        raise ValueError("columns must have equal length")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for j in range(n):
            w.writerow([fmt(c[j].item()) for c in cols])
    return path


def write_tsv(path, header: list[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv_columns(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body if r], dtype=float).reshape(-1, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def read_series(path) -> AmplitudeSeries:
    """Load a decay series from CSV with columns t and p (and optionally re_amp, im_amp)."""
    cols = read_csv_columns(path)
    if "t" not in cols:
        raise ValueError(f"{path}: missing column 't'")
    t = cols["t"]
    if "re_amp" in cols and "im_amp" in cols:
        return AmplitudeSeries.from_amplitude(t, cols["re_amp"] + 1j * cols["im_amp"], "external",
                                              source_file=str(path))
    if "p" not in cols:
        raise ValueError(f"{path}: need column 'p' or both 're_amp' and 'im_amp'")
    return AmplitudeSeries(t, None, cols["p"], "external", {"source_file": str(path)})


def _to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _to_plain(obj.real), "im": _to_plain(obj.imag)}
    if isinstance(obj, np.generic):
        return _to_plain(obj.item())
    return obj


def _encode(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted(obj.items())
        return "{\n" + ",\n".join(f"{inner}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, 17-digit floats, non-finite as null."""
    return _encode(_to_plain(obj)) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_sidecar(out_dir, name: str, info: dict) -> Path:
    """Run metadata (timestamps, versions, argv) kept out of the data files."""
    from . import __version__, kernels

    meta = {
        "command": name,
        "created_unix": time.time(),
        "argv": list(sys.argv),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "package_version": __version__,
        "backend": kernels.BACKEND,
        "threads": kernels.num_threads(),
    }
    meta.update(info)
    return write_json(Path(out_dir) / f"{name}.meta.json", meta)


def parse_config(path) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameters(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    params: ChainParams
    t_max: float = 15.0
    grid_points: int = 1501
    tolerances: dict = field(default_factory=lambda: {
        "quadrature_tol": 1e-12, "convergence_tol": 1e-10, "fit_tol": 0.05})
    output_dir: Path = Path(".")
    formats: tuple[str, ...] = FORMATS
    method: str = "both"
    exp_window: tuple[float, float] | None = None
    pow_window: tuple[float, float] | None = None
    series_file: Path | None = None
    epsilon0_grid: tuple[float, float, int] | None = None
    v0_grid: tuple[float, float, int] | None = None

    def times(self) -> np.ndarray:
        if self.t_max == 0:
            return np.zeros(1)
        return np.linspace(0.0, self.t_max, self.grid_points)

    def wants(self, kind: str) -> bool:
        return kind in self.formats


def _pair(text: str) -> tuple[float, float]:
    a, b = (float(x) for x in text.split(","))
    return a, b


def _grid(text: str) -> tuple[float, float, int]:
    """'start:stop:count' inclusive linear grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameters(f"grid must be start:stop:count, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def build_config(values: dict) -> RunConfig:
    """Validate a merged key/value map (strings or typed values) into a RunConfig."""
    v = {k: x for k, x in values.items() if x is not None}
    try:
        m = v.get("m_sites")
        params = make_params(
            float(v.get("epsilon0", 1.0)), float(v.get("v0", 0.4)), float(v.get("v", 1.0)),
            None if m in (None, "", "none") else int(m), float(v.get("hbar", 1.0)),
        )
        t_max = float(v.get("t_max", 15.0))
        grid = int(v.get("grid_points", 1501))
        tols = {
            "quadrature_tol": float(v.get("quadrature_tol", 1e-12)),
            "convergence_tol": float(v.get("convergence_tol", 1e-10)),
            "fit_tol": float(v.get("fit_tol", 0.05)),
        }
        fmts = v.get("format", "csv,json")
        fmts = tuple(f.strip() for f in (fmts.split(",") if isinstance(fmts, str) else fmts) if f.strip())
        method = str(v.get("method", "both"))
        exp_w = v.get("exp_window")
        pow_w = v.get("pow_window")
        e_grid = v.get("epsilon0_grid")
        v_grid = v.get("v0_grid")
    except (TypeError, ValueError) as exc:
        raise InvalidParameters(str(exc)) from exc
    if not (t_max >= 0 and math.isfinite(t_max)):
        raise InvalidParameters(f"t_max must be finite and >= 0, got {t_max}")
    if grid < 2:
        raise InvalidParameters(f"grid_points must be >= 2, got {grid}")
    if any(not tol > 0 for tol in tols.values()):
        raise InvalidParameters("tolerances must be positive")
    if not fmts or any(f not in FORMATS for f in fmts):
        raise InvalidParameters(f"format must be a subset of {FORMATS}, got {fmts}")
    if method not in METHODS:
        raise InvalidParameters(f"method must be one of {METHODS}, got {method!r}")
    cfg = RunConfig(params=params, t_max=t_max, grid_points=grid, tolerances=tols,
                    output_dir=Path(v.get("out", ".")), formats=fmts, method=method)
    extra = {}
    try:
        if exp_w:
            extra["exp_window"] = _pair(exp_w) if isinstance(exp_w, str) else tuple(exp_w)
        if pow_w:
            extra["pow_window"] = _pair(pow_w) if isinstance(pow_w, str) else tuple(pow_w)
        if e_grid:
            extra["epsilon0_grid"] = _grid(e_grid) if isinstance(e_grid, str) else tuple(e_grid)
        if v_grid:
            extra["v0_grid"] = _grid(v_grid) if isinstance(v_grid, str) else tuple(v_grid)
    except ValueError as exc:
        raise InvalidParameters(str(exc)) from exc
    if v.get("series"):
        extra["series_file"] = Path(v["series"])
    return replace(cfg, **extra)


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
    return path

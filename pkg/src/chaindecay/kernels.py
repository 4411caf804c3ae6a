"""Backend selection for the hot loops.

The compiled extension ``chaindecay._kernels`` is used when importable;
otherwise the numpy versions in ``chaindecay._fallback`` are. Setting
``CHAINDECAY_BACKEND=python`` forces the fallback. Thread count for the
compiled loops is read from ``SPINCHAIN_THREADS`` (0 or unset = all cores).
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_forced = os.environ.get("CHAINDECAY_BACKEND", "").lower()
if _forced == "python" or _compiled is None:
    _impl = _fallback
    BACKEND = "python"
else:
    _impl = _compiled
    BACKEND = "compiled"

HAVE_COMPILED = _compiled is not None


def num_threads() -> int:
    raw = os.environ.get("SPINCHAIN_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("SPINCHAIN_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('compiled', 'python') or the default."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def _uniform_step(t: np.ndarray) -> float | None:
    if t.size < 3:
        return None
    dt = (t[-1] - t[0]) / (t.size - 1)
    if dt <= 0:
        return None
    if np.max(np.abs(np.diff(t) - dt)) > 1e-12 * max(1.0, abs(t[-1])):
        return None
    return dt


def spectral_sum(x, w, t, backend: str | None = None) -> np.ndarray:
    """``sum_k w[k] * exp(-1j * x[k] * t)`` for every entry of ``t``."""
    impl = get_backend(backend)
    x = np.ascontiguousarray(x, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=float)
    nth = num_threads()
    dt = _uniform_step(t)
    if dt is not None:
        return impl.spectral_sum_uniform(x, w, float(t[0]), dt, t.size, nth)
    return impl.spectral_sum(x, w, t, nth)


def tridiag_first_row(diag, offdiag, backend: str | None = None):
    impl = get_backend(backend)
    return impl.tridiag_first_row(
        np.ascontiguousarray(diag, dtype=float), np.ascontiguousarray(offdiag, dtype=float)
    )

"""Numpy implementations of the compiled kernels.

Used when the Cython extension is unavailable or when
``CHAINDECAY_BACKEND=python`` is set.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

# complex128 elements per temporary (t, x) block
_CHUNK = 1 << 21


def spectral_sum(x, w, t, num_threads=0):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.empty(t.size, dtype=complex)
    rows = max(1, _CHUNK // max(x.size, 1))
    for start in range(0, t.size, rows):
        tt = t[start:start + rows]
        out[start:start + rows] = np.exp(-1j * np.outer(tt, x)) @ w
    return out


def spectral_sum_uniform(x, w, t0, dt, nt, num_threads=0):
    return spectral_sum(x, w, t0 + dt * np.arange(nt), num_threads)


def tridiag_first_row(diag, offdiag, max_iter=60):
    """Eigenvalues and first eigenvector components without forming eigenvectors.

    The squared first components follow from the interlacing product
    ``w_k = prod_j (l_k - mu_j) / prod_{j != k} (l_k - l_j)``, with ``mu`` the
    spectrum of the matrix with row/column 0 removed. Signs are fixed so the
    component equals the QL convention up to an irrelevant per-vector sign
    (only squares and products of first components are ever used).
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    n = diag.size
    if offdiag.size != n - 1:
        raise ValueError("offdiag must have length len(diag) - 1")
    if n == 1:
        return diag.copy(), np.ones(1)
    lam = eigh_tridiagonal(diag, offdiag, eigvals_only=True)
    if n == 2:
        mu = diag[1:].copy()
    else:
        mu = eigh_tridiagonal(diag[1:], offdiag[1:], eigvals_only=True)
    rows = max(1, _CHUNK // n)
    with np.errstate(divide="ignore"):
        logw = _log_weights(lam, mu, rows)
    return lam, np.sqrt(np.exp(logw))


def _log_weights(lam, mu, rows):
    n = lam.size
    logw = np.empty(n)
    for start in range(0, n, rows):
        lk = lam[start:start + rows, None]
        num = np.log(np.abs(lk - mu[None, :])).sum(axis=1)
        dl = np.abs(lk - lam[None, :])
        idx = np.arange(start, min(start + rows, n))
        dl[idx - start, idx] = 1.0
        logw[start:start + rows] = num - np.log(dl).sum(axis=1)
    return logw

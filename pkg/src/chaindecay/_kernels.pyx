# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

spectral_sum / spectral_sum_uniform evaluate sum_k w_k exp(-i x_k t_j) over a
time grid; tridiag_first_row is an implicit-QL eigensolver that only carries
the first row of the eigenvector matrix (Golub-Welsch style).
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport cos, sin, fabs, hypot, copysign

cnp.import_array()

cdef Py_ssize_t BLOCK = 64


def spectral_sum(const double[::1] x, const double[::1] w, const double[::1] t,
                 int num_threads=0):
    cdef Py_ssize_t nk = x.shape[0], nt = t.shape[0], j, k
    cdef double re, im, ph
    out = np.empty(nt, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    cdef int nth = num_threads if num_threads > 0 else 1
    with nogil:
        for j in prange(nt, schedule="static", num_threads=nth):
            re = 0.0
            im = 0.0
            for k in range(nk):
                ph = x[k] * t[j]
                re = re + w[k] * cos(ph)
                im = im - w[k] * sin(ph)
            o[2 * j] = re
            o[2 * j + 1] = im
    return out


def spectral_sum_uniform(const double[::1] x, const double[::1] w, double t0,
                         double dt, Py_ssize_t nt, int num_threads=0):
    """Same sum on t_j = t0 + j*dt, advancing each phasor by one complex
    multiplication per step and reseeding at the start of every block."""
    cdef Py_ssize_t nk = x.shape[0], nblocks = (nt + BLOCK - 1) // BLOCK
    cdef Py_ssize_t b, j, k, j0, jn
    cdef double zr, zi, rr, ri, tmp, ph
    step = np.empty((nk, 2), dtype=np.float64)
    cdef double[:, ::1] st = step
    for k in range(nk):
        st[k, 0] = cos(x[k] * dt)
        st[k, 1] = -sin(x[k] * dt)
    out = np.zeros(nt, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    cdef int nth = num_threads if num_threads > 0 else 1
    with nogil:
        for b in prange(nblocks, schedule="static", num_threads=nth):
            j0 = b * BLOCK
            jn = BLOCK if j0 + BLOCK <= nt else nt - j0
            for k in range(nk):
                ph = x[k] * (t0 + j0 * dt)
                zr = w[k] * cos(ph)
                zi = -w[k] * sin(ph)
                rr = st[k, 0]
                ri = st[k, 1]
                for j in range(jn):
                    o[2 * (j0 + j)] += zr
                    o[2 * (j0 + j) + 1] += zi
                    tmp = zr * rr - zi * ri
                    zi = zr * ri + zi * rr
                    zr = tmp
    return out


def tridiag_first_row(const double[::1] diag, const double[::1] offdiag,
                      int max_iter=60):
    """Eigenvalues (ascending) and first eigenvector components of the real
    symmetric tridiagonal matrix with the given diagonal and off-diagonal."""
    cdef Py_ssize_t n = diag.shape[0]
    if offdiag.shape[0] != n - 1:
        raise ValueError("offdiag must have length len(diag) - 1")
    d_arr = np.array(diag, dtype=np.float64, copy=True)
    e_arr = np.zeros(n, dtype=np.float64)
    z_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] d = d_arr, e = e_arr, z = z_arr
    cdef Py_ssize_t l, m, i
    cdef int it, status = 0
    cdef double dd, g, r, s, c, p, f, bb
    cdef bint underflow
    for i in range(n - 1):
        e[i] = offdiag[i]
    if n > 0:
        z[0] = 1.0
    with nogil:
        for l in range(n):
            it = 0
            while True:
                m = l
                while m < n - 1:
                    dd = fabs(d[m]) + fabs(d[m + 1])
                    if fabs(e[m]) <= 2.220446049250313e-16 * dd:
                        break
                    m += 1
                if m == l:
                    break
                it += 1
                if it > max_iter:
                    status = 1
                    break
                g = (d[l + 1] - d[l]) / (2.0 * e[l])
                r = hypot(g, 1.0)
                g = d[m] - d[l] + e[l] / (g + copysign(r, g))
                s = 1.0
                c = 1.0
                p = 0.0
                underflow = False
                i = m - 1
                while i >= l:
                    f = s * e[i]
                    bb = c * e[i]
                    r = hypot(f, g)
                    e[i + 1] = r
                    if r == 0.0:
                        d[i + 1] -= p
                        e[m] = 0.0
                        underflow = True
                        break
                    s = f / r
                    c = g / r
                    g = d[i + 1] - p
                    r = (d[i] - g) * s + 2.0 * c * bb
                    p = s * r
                    d[i + 1] = g + p
                    g = c * r - bb
                    f = z[i + 1]
                    z[i + 1] = s * z[i] + c * f
                    z[i] = c * z[i] - s * f
                    i -= 1
                if underflow:
                    continue
                d[l] -= p
                e[l] = g
                e[m] = 0.0
            if status:
                break
    if status:
        raise RuntimeError("implicit QL did not converge")
    order = np.argsort(d_arr, kind="stable")
    return d_arr[order], z_arr[order]

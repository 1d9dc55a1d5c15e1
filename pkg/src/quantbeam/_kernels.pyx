# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, cos, sin, M_PI

cnp.import_array()


def quantize_midrise(x, double step, long n_levels):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double half = n_levels // 2
    cdef double k
    for i in range(n):
        k = floor(xv[i] / step)
        if k < -half:
            k = -half
        elif k > half - 1:
            k = half - 1
        ov[i] = (k + 0.5) * step
    return out


def array_gain(weights, sector, u, v, double spacing):
    cdef const double complex[:, :, ::1] w = np.ascontiguousarray(weights, dtype=np.complex128)
    cdef const cnp.int64_t[::1] sv = np.ascontiguousarray(sector, dtype=np.int64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t npair = sv.shape[0], rows = w.shape[1], cols = w.shape[2]
    cdef Py_ssize_t p, r, c, s
    out = np.empty(npair, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[64] ecr, eci
    cdef double k = 2.0 * M_PI * spacing, ph
    cdef double norm = 1.0 / (rows * cols)
    cdef double sr, si, err_, eri, tr, ar, ai, rr, ri, wr, wi
    if cols > 64:
        raise ValueError("compiled array_gain supports at most 64 columns")
    for p in range(npair):
        s = sv[p]
        # column phasors by recurrence: exp(i k c u) = exp(i k u)^c
        ph = k * uv[p]
        sr = cos(ph)
        si = sin(ph)
        ecr[0] = 1.0
        eci[0] = 0.0
        for c in range(1, cols):
            ecr[c] = ecr[c - 1] * sr - eci[c - 1] * si
            eci[c] = ecr[c - 1] * si + eci[c - 1] * sr
        ph = k * vv[p]
        sr = cos(ph)
        si = sin(ph)
        err_ = 1.0
        eri = 0.0
        ar = 0.0
        ai = 0.0
        for r in range(rows):
            rr = 0.0
            ri = 0.0
            for c in range(cols):
                # conj(w) * ec
                wr = w[s, r, c].real
                wi = w[s, r, c].imag
                rr = rr + wr * ecr[c] + wi * eci[c]
                ri = ri + wr * eci[c] - wi * ecr[c]
            ar = ar + err_ * rr - eri * ri
            ai = ai + err_ * ri + eri * rr
            tr = err_ * sr - eri * si
            eri = err_ * si + eri * sr
            err_ = tr
        ov[p] = (ar * ar + ai * ai) * norm
    return out

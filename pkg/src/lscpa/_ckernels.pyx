# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled beamforming kernels; same contract as ``lscpa._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


def mrt_gains(const double complex[:, :, ::1] h_true, const double complex[:, :, ::1] h_est):
    cdef Py_ssize_t n = h_est.shape[0], M = h_est.shape[1], R = h_est.shape[2]
    cdef Py_ssize_t Rt = h_true.shape[2]
    if R > 2:
        from ._pykernels import mrt_gains as _fallback
        return _fallback(np.asarray(h_true), np.asarray(h_est))
    if h_true.shape[0] != n or h_true.shape[1] != M:
        raise ValueError("h_true and h_est disagree on (n, M)")
    gt_arr = np.empty(n, dtype=np.float64)
    ge_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gt = gt_arr
    cdef double[::1] ge = ge_arr
    cdef Py_ssize_t i, m, r
    cdef double a, c, half, lam, na, nb, norm, acc
    cdef double complex b, v0, v1, v0b, v1b, y, u
    with nogil:
        for i in range(n):
            if R == 1:
                a = 0.0
                for m in range(M):
                    a += _abs2(h_est[i, m, 0])
                lam = a
                v0 = 1.0
                v1 = 0.0
                norm = sqrt(a)
            else:
                a = 0.0
                c = 0.0
                b = 0.0
                for m in range(M):
                    a += _abs2(h_est[i, m, 0])
                    c += _abs2(h_est[i, m, 1])
                    b = b + h_est[i, m, 0].conjugate() * h_est[i, m, 1]
                half = 0.5 * (a - c)
                lam = 0.5 * (a + c) + sqrt(half * half + _abs2(b))
                v0 = b
                v1 = lam - a
                v0b = lam - c
                v1b = b.conjugate()
                na = _abs2(v0) + _abs2(v1)
                nb = _abs2(v0b) + _abs2(v1b)
                if nb > na:
                    v0 = v0b
                    v1 = v1b
                    na = nb
                if na == 0.0:
                    v0 = 1.0
                    v1 = 0.0
                norm = 0.0
                for m in range(M):
                    norm += _abs2(v0 * h_est[i, m, 0] + v1 * h_est[i, m, 1])
                norm = sqrt(norm)
            acc = 0.0
            for r in range(Rt):
                y = 0.0
                for m in range(M):
                    if R == 1:
                        u = h_est[i, m, 0]
                    else:
                        u = v0 * h_est[i, m, 0] + v1 * h_est[i, m, 1]
                    y = y + h_true[i, m, r] * u.conjugate()
                acc += _abs2(y) / (norm * norm)
            gt[i] = acc
            ge[i] = lam
    return gt_arr, ge_arr


def random_gains(const double complex[:, :, ::1] h_true, const double complex[:, ::1] w):
    cdef Py_ssize_t n = h_true.shape[0], M = h_true.shape[1], R = h_true.shape[2]
    if w.shape[0] != n or w.shape[1] != M:
        raise ValueError("w must have shape (n, M)")
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, m, r
    cdef double acc
    cdef double complex y
    with nogil:
        for i in range(n):
            acc = 0.0
            for r in range(R):
                y = 0.0
                for m in range(M):
                    y = y + h_true[i, m, r] * w[i, m]
                acc += _abs2(y)
            out[i] = acc
    return out_arr

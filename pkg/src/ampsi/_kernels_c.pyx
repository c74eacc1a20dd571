# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled fused denoiser pass; mirrors _kernels_py.denoise_pass."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

BACKEND_NAME = "cython"


def denoise_pass(cnp.complex128_t[:, ::1] R, double[::1] logc,
                 double gain, double xi, double log_det,
                 cnp.complex128_t[:, ::1] out):
    cdef Py_ssize_t N = R.shape[0]
    cdef Py_ssize_t M = R.shape[1]
    gram_arr = np.zeros((M, M), dtype=np.complex128)
    lp_arr = np.empty(N)
    neg_arr = np.empty(N)
    cdef cnp.complex128_t[:, ::1] gram = gram_arr
    cdef double[::1] lp = lp_arr
    cdef double[::1] t = neg_arr  # reused: -|lp| in pass 1, exp(-|lp|) after
    # interleaved re/im views of the complex buffers for branch-free loops
    cdef double* rp = <double*> &R[0, 0]
    cdef double* op = <double*> &out[0, 0]
    cdef double* gp = <double*> &gram[0, 0]
    cdef double c1 = 0.0
    cdef double sq, s, w, ti, q, aj, bj, ak, bk
    cdef Py_ssize_t n, j, k, base, gidx

    for n in range(N):
        base = 2 * n * M
        sq = 0.0
        for j in range(2 * M):
            sq += rp[base + j] * rp[base + j]
        lp[n] = log_det - xi * sq + logc[n]
        t[n] = -fabs(lp[n])

    # one vectorized exponential for the whole batch; everything else is
    # rational in t = exp(-|lp|).  With phi = exp(lp):
    #   1/(1+phi)      = t/(1+t)  if lp >= 0 else 1/(1+t)
    #   phi/(1+phi)^2  = t/(1+t)^2
    # and t = 0 at lp = +-inf gives the exact saturation values.
    np.exp(neg_arr, out=neg_arr)

    for n in range(N):
        ti = t[n]
        q = 1.0 + ti
        s = gain * ti / q if lp[n] >= 0.0 else gain / q
        w = ti / (q * q)
        base = 2 * n * M
        for j in range(2 * M):
            op[base + j] = s * rp[base + j]
        c1 += s
        if w != 0.0:
            # gram += w * conj(r_n)^T r_n as interleaved double arithmetic
            for j in range(M):
                aj = w * rp[base + 2 * j]
                bj = w * rp[base + 2 * j + 1]
                gidx = 2 * j * M
                for k in range(M):
                    ak = rp[base + 2 * k]
                    bk = rp[base + 2 * k + 1]
                    gp[gidx + 2 * k] += aj * ak + bj * bk
                    gp[gidx + 2 * k + 1] += aj * bk - bj * ak
    return c1, gram_arr

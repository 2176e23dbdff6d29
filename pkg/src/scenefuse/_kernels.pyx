# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot per-step latent math.

Mirrors ``_kernels_py`` exactly: masked positions select, unmasked arithmetic
uses the same operation order, so results are bit-identical to the NumPy
fallback (the extension is built with -ffp-contract=off to prevent FMA
contraction from changing roundings).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def blend(cnp.uint8_t[:, ::1] mask, cnp.float32_t[:, :, ::1] a, cnp.float32_t[:, :, ::1] b):
    cdef Py_ssize_t C = a.shape[0], H = a.shape[1], W = a.shape[2]
    out_arr = np.empty((C, H, W), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, j
    for c in range(C):
        for i in range(H):
            for j in range(W):
                out[c, i, j] = a[c, i, j] if mask[i, j] else b[c, i, j]
    return out_arr


def noise_mix(cnp.float32_t[:, :, ::1] x0, cnp.float32_t[:, :, ::1] eps,
              float s_sig, float s_noise):
    cdef Py_ssize_t C = x0.shape[0], H = x0.shape[1], W = x0.shape[2]
    out_arr = np.empty((C, H, W), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, j
    for c in range(C):
        for i in range(H):
            for j in range(W):
                out[c, i, j] = s_sig * x0[c, i, j] + s_noise * eps[c, i, j]
    return out_arr


def masked_noise_blend(cnp.uint8_t[:, ::1] mask, cnp.float32_t[:, :, ::1] obj0,
                       cnp.float32_t[:, :, ::1] eps, float s_sig, float s_noise,
                       cnp.float32_t[:, :, ::1] bg):
    cdef Py_ssize_t C = obj0.shape[0], H = obj0.shape[1], W = obj0.shape[2]
    out_arr = np.empty((C, H, W), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, j
    for c in range(C):
        for i in range(H):
            for j in range(W):
                if mask[i, j]:
                    out[c, i, j] = s_sig * obj0[c, i, j] + s_noise * eps[c, i, j]
                else:
                    out[c, i, j] = bg[c, i, j]
    return out_arr


def ddim_update(cnp.float32_t[:, :, ::1] z, cnp.float32_t[:, :, ::1] eps,
                float s_sig_t, float s_noise_t, float s_sig_prev, float s_noise_prev):
    cdef Py_ssize_t C = z.shape[0], H = z.shape[1], W = z.shape[2]
    out_arr = np.empty((C, H, W), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, i, j
    cdef float x0
    for c in range(C):
        for i in range(H):
            for j in range(W):
                x0 = (z[c, i, j] - s_noise_t * eps[c, i, j]) / s_sig_t
                out[c, i, j] = s_sig_prev * x0 + s_noise_prev * eps[c, i, j]
    return out_arr


def block_coverage(cnp.uint8_t[:, ::1] mask, Py_ssize_t factor, long min_count):
    cdef Py_ssize_t H = mask.shape[0], W = mask.shape[1]
    cdef Py_ssize_t oh = H // factor, ow = W // factor
    out_arr = np.empty((oh, ow), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t bi, bj, i, j
    cdef long count
    for bi in range(oh):
        for bj in range(ow):
            count = 0
            for i in range(bi * factor, (bi + 1) * factor):
                for j in range(bj * factor, (bj + 1) * factor):
                    count += mask[i, j]
            out[bi, bj] = 1 if count >= min_count else 0
    return out_arr

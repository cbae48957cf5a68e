# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels. Semantics mirror _conv_py exactly."""
import numpy as np


def conv2d_mc(double[:, :, ::1] x, double[:, :, :, ::1] w, int replicate):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], D = w.shape[3]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    out_np = np.zeros((H, W, D))
    cdef double[:, :, ::1] out = out_np
    cdef Py_ssize_t i, j, a, b, c, d, ii, jj
    cdef double v
    for i in range(H):
        for j in range(W):
            for a in range(kh):
                ii = i + a - ph
                if replicate:
                    ii = 0 if ii < 0 else (H - 1 if ii >= H else ii)
                elif ii < 0 or ii >= H:
                    continue
                for b in range(kw):
                    jj = j + b - pw
                    if replicate:
                        jj = 0 if jj < 0 else (W - 1 if jj >= W else jj)
                    elif jj < 0 or jj >= W:
                        continue
                    for c in range(C):
                        v = x[ii, jj, c]
                        for d in range(D):
                            out[i, j, d] += v * w[a, b, c, d]
    return out_np


def conv2d_mc_grad_input(double[:, :, ::1] gy, double[:, :, :, ::1] w,
                         int replicate):
    cdef Py_ssize_t H = gy.shape[0], W = gy.shape[1], D = gy.shape[2]
    cdef Py_ssize_t kh = w.shape[0], kw = w.shape[1], C = w.shape[2]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    gx_np = np.zeros((H, W, C))
    cdef double[:, :, ::1] gx = gx_np
    cdef Py_ssize_t i, j, a, b, c, d, ii, jj
    cdef double g
    for i in range(H):
        for j in range(W):
            for a in range(kh):
                ii = i + a - ph
                if replicate:
                    ii = 0 if ii < 0 else (H - 1 if ii >= H else ii)
                elif ii < 0 or ii >= H:
                    continue
                for b in range(kw):
                    jj = j + b - pw
                    if replicate:
                        jj = 0 if jj < 0 else (W - 1 if jj >= W else jj)
                    elif jj < 0 or jj >= W:
                        continue
                    for d in range(D):
                        g = gy[i, j, d]
                        for c in range(C):
                            gx[ii, jj, c] += g * w[a, b, c, d]
    return gx_np


def conv2d_mc_grad_weights(double[:, :, ::1] gy, double[:, :, ::1] x,
                           Py_ssize_t kh, Py_ssize_t kw, int replicate):
    cdef Py_ssize_t H = gy.shape[0], W = gy.shape[1], D = gy.shape[2]
    cdef Py_ssize_t C = x.shape[2]
    cdef Py_ssize_t ph = kh // 2, pw = kw // 2
    gw_np = np.zeros((kh, kw, C, D))
    cdef double[:, :, :, ::1] gw = gw_np
    cdef Py_ssize_t i, j, a, b, c, d, ii, jj
    cdef double v
    for i in range(H):
        for j in range(W):
            for a in range(kh):
                ii = i + a - ph
                if replicate:
                    ii = 0 if ii < 0 else (H - 1 if ii >= H else ii)
                elif ii < 0 or ii >= H:
                    continue
                for b in range(kw):
                    jj = j + b - pw
                    if replicate:
                        jj = 0 if jj < 0 else (W - 1 if jj >= W else jj)
                    elif jj < 0 or jj >= W:
                        continue
                    for c in range(C):
                        v = x[ii, jj, c]
                        for d in range(D):
                            gw[a, b, c, d] += v * gy[i, j, d]
    return gw_np

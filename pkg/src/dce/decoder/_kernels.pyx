# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled decoder kernels: fused bilinear upsampling, ReLU and batchnorm.

These mirror :mod:`dce.decoder.kernels_numpy` but avoid the temporaries of
the dense-matrix formulation; the gather/scatter loops touch each element a
constant number of times. Reduction order is fixed, so repeated runs are
bit-identical. The 1x1 convolution is not implemented here since BLAS matrix
products already win for it.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def upsample2x_fwd(const double[:, :, ::1] x,
                   const long[::1] fi0, const long[::1] fi1, const double[::1] fw,
                   const long[::1] ti0, const long[::1] ti1, const double[::1] tw):
    cdef Py_ssize_t c_dim = x.shape[0]
    cdef Py_ssize_t f_out = fi0.shape[0]
    cdef Py_ssize_t t_out = ti0.shape[0]
    out_arr = np.empty((c_dim, f_out, t_out), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, j, u
    cdef Py_ssize_t f0, f1, t0, t1
    cdef double wf, wt, a, b
    for c in range(c_dim):
        for j in range(f_out):
            f0 = fi0[j]
            f1 = fi1[j]
            wf = fw[j]
            for u in range(t_out):
                t0 = ti0[u]
                t1 = ti1[u]
                wt = tw[u]
                a = (1.0 - wt) * x[c, f0, t0] + wt * x[c, f0, t1]
                b = (1.0 - wt) * x[c, f1, t0] + wt * x[c, f1, t1]
                out[c, j, u] = (1.0 - wf) * a + wf * b
    return out_arr


def upsample2x_bwd(const double[:, :, ::1] gy, Py_ssize_t f_in, Py_ssize_t t_in,
                   const long[::1] fi0, const long[::1] fi1, const double[::1] fw,
                   const long[::1] ti0, const long[::1] ti1, const double[::1] tw):
    cdef Py_ssize_t c_dim = gy.shape[0]
    cdef Py_ssize_t f_out = gy.shape[1]
    cdef Py_ssize_t t_out = gy.shape[2]
    gx_arr = np.zeros((c_dim, f_in, t_in), dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t c, j, u
    cdef Py_ssize_t f0, f1, t0, t1
    cdef double wf, wt, g, ga, gb
    for c in range(c_dim):
        for j in range(f_out):
            f0 = fi0[j]
            f1 = fi1[j]
            wf = fw[j]
            for u in range(t_out):
                t0 = ti0[u]
                t1 = ti1[u]
                wt = tw[u]
                g = gy[c, j, u]
                ga = (1.0 - wf) * g
                gb = wf * g
                gx[c, f0, t0] += (1.0 - wt) * ga
                gx[c, f0, t1] += wt * ga
                gx[c, f1, t0] += (1.0 - wt) * gb
                gx[c, f1, t1] += wt * gb
    return gx_arr


def relu_fwd(const double[:, :, ::1] x):
    cdef Py_ssize_t c_dim = x.shape[0], f_dim = x.shape[1], t_dim = x.shape[2]
    out_arr = np.empty((c_dim, f_dim, t_dim), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, f, t
    cdef double v
    for c in range(c_dim):
        for f in range(f_dim):
            for t in range(t_dim):
                v = x[c, f, t]
                out[c, f, t] = v if v > 0.0 else 0.0
    return out_arr


def relu_bwd(const double[:, :, ::1] x, const double[:, :, ::1] gy):
    cdef Py_ssize_t c_dim = x.shape[0], f_dim = x.shape[1], t_dim = x.shape[2]
    gx_arr = np.empty((c_dim, f_dim, t_dim), dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t c, f, t
    for c in range(c_dim):
        for f in range(f_dim):
            for t in range(t_dim):
                gx[c, f, t] = gy[c, f, t] if x[c, f, t] > 0.0 else 0.0
    return gx_arr


def bn_fwd(const double[:, :, ::1] x, const double[::1] gamma,
           const double[::1] beta, double eps):
    cdef Py_ssize_t c_dim = x.shape[0], f_dim = x.shape[1], t_dim = x.shape[2]
    cdef Py_ssize_t n = f_dim * t_dim
    if n < 2:
        raise ValueError("batchnorm needs at least 2 positions per channel")
    y_arr = np.empty((c_dim, f_dim, t_dim), dtype=np.float64)
    xhat_arr = np.empty((c_dim, f_dim, t_dim), dtype=np.float64)
    istd_arr = np.empty(c_dim, dtype=np.float64)
    cdef double[:, :, ::1] y = y_arr
    cdef double[:, :, ::1] xhat = xhat_arr
    cdef double[::1] istd = istd_arr
    cdef Py_ssize_t c, f, t
    cdef double mu, var, d, inv, g, b, xh
    for c in range(c_dim):
        mu = 0.0
        for f in range(f_dim):
            for t in range(t_dim):
                mu += x[c, f, t]
        mu /= n
        var = 0.0
        for f in range(f_dim):
            for t in range(t_dim):
                d = x[c, f, t] - mu
                var += d * d
        var /= n
        inv = 1.0 / sqrt(var + eps)
        istd[c] = inv
        g = gamma[c]
        b = beta[c]
        for f in range(f_dim):
            for t in range(t_dim):
                xh = (x[c, f, t] - mu) * inv
                xhat[c, f, t] = xh
                y[c, f, t] = g * xh + b
    return y_arr, xhat_arr, istd_arr


def bn_bwd(const double[:, :, ::1] xhat, const double[::1] inv_std,
           const double[::1] gamma, const double[:, :, ::1] gy):
    cdef Py_ssize_t c_dim = xhat.shape[0], f_dim = xhat.shape[1], t_dim = xhat.shape[2]
    cdef Py_ssize_t n = f_dim * t_dim
    gx_arr = np.empty((c_dim, f_dim, t_dim), dtype=np.float64)
    ggamma_arr = np.empty(c_dim, dtype=np.float64)
    gbeta_arr = np.empty(c_dim, dtype=np.float64)
    cdef double[:, :, ::1] gx = gx_arr
    cdef double[::1] ggamma = ggamma_arr
    cdef double[::1] gbeta = gbeta_arr
    cdef Py_ssize_t c, f, t
    cdef double sum_g, sum_gx, scale, mg, mgx
    for c in range(c_dim):
        sum_g = 0.0
        sum_gx = 0.0
        for f in range(f_dim):
            for t in range(t_dim):
                sum_g += gy[c, f, t]
                sum_gx += gy[c, f, t] * xhat[c, f, t]
        ggamma[c] = sum_gx
        gbeta[c] = sum_g
        mg = sum_g / n
        mgx = sum_gx / n
        scale = gamma[c] * inv_std[c]
        for f in range(f_dim):
            for t in range(t_dim):
                gx[c, f, t] = scale * (gy[c, f, t] - mg - xhat[c, f, t] * mgx)
    return gx_arr, ggamma_arr, gbeta_arr

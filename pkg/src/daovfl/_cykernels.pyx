# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled dense-layer kernels; call contract mirrors daovfl._pykernels."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, sqrt, tanh

cnp.import_array()

LINEAR, RELU, TANH, SIGMOID = 0, 1, 2, 3


def layer_forward(const double[:, ::1] x, const double[:, ::1] w, const double[::1] b, int act):
    cdef Py_ssize_t n = x.shape[0], d_in = x.shape[1], d_out = w.shape[1]
    out_arr = np.empty((n, d_out), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(d_out):
            acc = b[j]
            for k in range(d_in):
                acc += x[i, k] * w[k, j]
            if act == 1:
                if acc < 0.0:
                    acc = 0.0
            elif act == 2:
                acc = tanh(acc)
            elif act == 3:
                acc = 1.0 / (1.0 + exp(-acc))
            out[i, j] = acc
    return out_arr


def layer_backward(const double[:, ::1] x, const double[:, ::1] a, const double[:, ::1] w,
                   int act, const double[:, ::1] upstream):
    cdef Py_ssize_t n = x.shape[0], d_in = x.shape[1], d_out = w.shape[1]
    dw_arr = np.zeros((d_in, d_out), dtype=np.float64)
    db_arr = np.zeros(d_out, dtype=np.float64)
    dx_arr = np.zeros((n, d_in), dtype=np.float64)
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dx = dx_arr
    cdef Py_ssize_t i, j, k
    cdef double dz, ai
    for i in range(n):
        for j in range(d_out):
            dz = upstream[i, j]
            if act == 1:
                if a[i, j] <= 0.0:
                    dz = 0.0
            elif act == 2:
                ai = a[i, j]
                dz *= 1.0 - ai * ai
            elif act == 3:
                ai = a[i, j]
                dz *= ai * (1.0 - ai)
            if dz != 0.0:
                db[j] += dz
                for k in range(d_in):
                    dw[k, j] += x[i, k] * dz
                    dx[i, k] += w[k, j] * dz
    return dw_arr, db_arr, dx_arr


def sgd_update(double[::1] p, const double[::1] g, double eta):
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        p[i] -= eta * g[i]


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, long t):
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef Py_ssize_t i
    cdef double gi
    for i in range(p.shape[0]):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)


def quantize_midtread(const double[:, ::1] x, double a, long levels):
    cdef double step = 2.0 * a / (levels - 1)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double xv
    for i in range(n):
        for j in range(d):
            xv = x[i, j]
            if xv < -a:
                xv = -a
            elif xv > a:
                xv = a
            out[i, j] = floor((xv + a) / step + 0.5) * step - a
    return out_arr

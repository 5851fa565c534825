# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: wall stencil derivatives and batched tridiagonal solves."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx_t

ctypedef fused rhs_t:
    double
    cplx_t


def dz_centered(values, double dz):
    """Derivative along the last axis, centered interior, one-sided walls."""
    f2 = np.ascontiguousarray(values, dtype=np.float64)
    shp = f2.shape
    # no negative tuple indices here: wraparound is off module-wide
    flat = f2.reshape(-1, f2.shape[f2.ndim - 1])
    out = np.empty_like(flat)
    _dz_rows(flat, out, dz)
    return out.reshape(shp)


cdef void _dz_rows(double[:, ::1] f, double[:, ::1] out, double dz) noexcept nogil:
    cdef Py_ssize_t i, k, m = f.shape[0], n = f.shape[1]
    cdef double c = 1.0 / (2.0 * dz)
    for i in range(m):
        out[i, 0] = (-3.0 * f[i, 0] + 4.0 * f[i, 1] - f[i, 2]) * c
        for k in range(1, n - 1):
            out[i, k] = (f[i, k + 1] - f[i, k - 1]) * c
        out[i, n - 1] = (3.0 * f[i, n - 1] - 4.0 * f[i, n - 2] + f[i, n - 3]) * c


def thomas_batch(dl, d, du, b):
    """Solve a batch of tridiagonal systems (real bands, real or complex rhs)."""
    cdef double[:, ::1] dlv = np.ascontiguousarray(dl, dtype=np.float64)
    cdef double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef double[:, ::1] duv = np.ascontiguousarray(du, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[1]
    cdef double[::1] w = np.empty(n - 1)
    cdef cplx_t[:, ::1] bz
    cdef cplx_t[:, ::1] xzv
    cdef cplx_t[::1] gz
    cdef double[:, ::1] br
    cdef double[:, ::1] xrv
    cdef double[::1] gr
    if np.iscomplexobj(b):
        bc = np.ascontiguousarray(b, dtype=np.complex128)
        xc = np.empty_like(bc)
        bz = bc
        xzv = xc
        gz = np.empty(n, dtype=np.complex128)
        _thomas(dlv, dv, duv, bz, xzv, w, gz)
        return xc
    ba = np.ascontiguousarray(b, dtype=np.float64)
    xa = np.empty_like(ba)
    br = ba
    xrv = xa
    gr = np.empty(n)
    _thomas(dlv, dv, duv, br, xrv, w, gr)
    return xa


cdef void _thomas(double[:, ::1] dl, double[:, ::1] d, double[:, ::1] du,
                  rhs_t[:, ::1] b, rhs_t[:, ::1] x,
                  double[::1] w, rhs_t[::1] g) noexcept nogil:
    cdef Py_ssize_t ib, i, B = d.shape[0], n = d.shape[1]
    cdef double denom
    for ib in range(B):
        w[0] = du[ib, 0] / d[ib, 0]
        g[0] = b[ib, 0] / d[ib, 0]
        for i in range(1, n):
            denom = d[ib, i] - dl[ib, i - 1] * w[i - 1]
            if i < n - 1:
                w[i] = du[ib, i] / denom
            g[i] = (b[ib, i] - dl[ib, i - 1] * g[i - 1]) / denom
        x[ib, n - 1] = g[n - 1]
        for i in range(n - 2, -1, -1):
            x[ib, i] = g[i] - w[i] * x[ib, i + 1]

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled accumulation loops for the focal-field quadrature sums.

Mirrors _kernels_py.py; both backends share a fixed ascending summation
order over pupil rings and the same small-argument series for J2, so their
results agree to roundoff.
"""

import numpy as np

from libc.math cimport cos, sin

cimport scipy.special.cython_special as cs


cdef inline double _j2_from(double x, double j0x, double j1x) noexcept:
    cdef double x2
    if -1e-4 < x < 1e-4:
        x2 = x * x
        return x2 / 8.0 * (1.0 - x2 / 12.0)
    return 2.0 * j1x / x - j0x


def radial_sums(double[::1] x_scale, double[::1] w,
                double[::1] cos_f, double[::1] sin_f,
                double complex[::1] g_o, double complex[::1] g_e,
                r):
    """Quadrature sums of the five radial field integrals.

    Columns per lateral radius: C0o, C0e, C1e, C2o, C2e.
    """
    cdef double[::1] rv = np.ascontiguousarray(np.atleast_1d(r), dtype=np.float64)
    cdef Py_ssize_t n = x_scale.shape[0]
    cdef Py_ssize_t m = rv.shape[0]
    out = np.empty((m, 5), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef Py_ssize_t i, k
    cdef double x, j0x, j1x, j2x, rr
    cdef double complex wo, wec, wes
    cdef double complex c0o, c0e, c1e, c2o, c2e
    for k in range(m):
        rr = rv[k]
        c0o = 0; c0e = 0; c1e = 0; c2o = 0; c2e = 0
        for i in range(n):
            x = rr * x_scale[i]
            j0x = cs.j0(x)
            j1x = cs.j1(x)
            j2x = _j2_from(x, j0x, j1x)
            wo = w[i] * g_o[i]
            wec = w[i] * cos_f[i] * g_e[i]
            wes = w[i] * sin_f[i] * g_e[i]
            c0o = c0o + j0x * wo
            c0e = c0e + j0x * wec
            c1e = c1e + j1x * wes
            c2o = c2o + j2x * wo
            c2e = c2e + j2x * wec
        ov[k, 0] = c0o
        ov[k, 1] = c0e
        ov[k, 2] = c1e
        ov[k, 3] = c2o
        ov[k, 4] = c2e
    return out


def axial_sums(double[::1] w, double[::1] cos_f,
               double complex[::1] base_o, double complex[::1] base_e,
               double[::1] dkz_o, double[::1] dkz_e,
               z):
    """On-axis amplitudes versus focal displacement z (columns C0o, C0e)."""
    cdef double[::1] zv = np.ascontiguousarray(np.atleast_1d(z), dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t m = zv.shape[0]
    out = np.empty((m, 2), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef Py_ssize_t i, k
    cdef double zz, po, pe
    cdef double complex c0o, c0e
    for k in range(m):
        zz = zv[k]
        c0o = 0; c0e = 0
        for i in range(n):
            po = zz * dkz_o[i]
            pe = zz * dkz_e[i]
            c0o = c0o + w[i] * base_o[i] * (cos(po) + 1j * sin(po))
            c0e = c0e + w[i] * cos_f[i] * base_e[i] * (cos(pe) + 1j * sin(pe))
        ov[k, 0] = c0o
        ov[k, 1] = c0e
    return out

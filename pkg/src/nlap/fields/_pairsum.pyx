# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Hot loops for the quadrature backend: accumulate weighted antisymmetric
pair differences ``u(x + z) - u(x - z)`` over stencil offsets, with zero
extension beyond the array bounds.  A pure-Python twin with identical
semantics lives in ``_pairsum_py``; tests may force it via the
``NLAP_FORCE_PYTHON`` environment variable."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairs_1d(double[::1] u, double[::1] weights, double[::1] out):
    """out[i] += sum_o weights[o-1] * (u[i+o] - u[i-o]), zero-extended."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = weights.shape[0]
    cdef Py_ssize_t i, o
    cdef double w
    for o in range(1, m + 1):
        w = weights[o - 1]
        if w == 0.0:
            continue
        for i in range(0, n - o):
            out[i] += w * u[i + o]
        for i in range(o, n):
            out[i] -= w * u[i - o]


def pairs_2d(double[:, ::1] u, long[::1] op, long[::1] oq,
             double[::1] wx, double[::1] wy,
             double[:, ::1] gx, double[:, ::1] gy):
    """Vector accumulation over half-stencil offsets (p, q):
    g_c[i, j] += w_c[m] * (u[i+p, j+q] - u[i-p, j-q]), zero-extended."""
    cdef Py_ssize_t n0 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    cdef Py_ssize_t nm = op.shape[0]
    cdef Py_ssize_t m, i, j, p, q, ilo, ihi, jlo, jhi
    cdef double a, b, v
    for m in range(nm):
        p = op[m]; q = oq[m]
        a = wx[m]; b = wy[m]
        if a == 0.0 and b == 0.0:
            continue
        # + read: u[i+p, j+q]
        ilo = 0 if p >= 0 else -p
        ihi = n0 - p if p >= 0 else n0
        jlo = 0 if q >= 0 else -q
        jhi = n1 - q if q >= 0 else n1
        for i in range(ilo, ihi):
            for j in range(jlo, jhi):
                v = u[i + p, j + q]
                gx[i, j] += a * v
                gy[i, j] += b * v
        # - read: u[i-p, j-q]
        ilo = p if p >= 0 else 0
        ihi = n0 if p >= 0 else n0 + p
        jlo = q if q >= 0 else 0
        jhi = n1 if q >= 0 else n1 + q
        for i in range(ilo, ihi):
            for j in range(jlo, jhi):
                v = u[i - p, j - q]
                gx[i, j] -= a * v
                gy[i, j] -= b * v


def pairs_2d_single(double[:, ::1] u, long[::1] op, long[::1] oq,
                    double[::1] w, double[:, ::1] out):
    """Scalar accumulation (divergence contraction of one component)."""
    cdef Py_ssize_t n0 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    cdef Py_ssize_t nm = op.shape[0]
    cdef Py_ssize_t m, i, j, p, q, ilo, ihi, jlo, jhi
    cdef double a
    for m in range(nm):
        p = op[m]; q = oq[m]
        a = w[m]
        if a == 0.0:
            continue
        ilo = 0 if p >= 0 else -p
        ihi = n0 - p if p >= 0 else n0
        jlo = 0 if q >= 0 else -q
        jhi = n1 - q if q >= 0 else n1
        for i in range(ilo, ihi):
            for j in range(jlo, jhi):
                out[i, j] += a * u[i + p, j + q]
        ilo = p if p >= 0 else 0
        ihi = n0 if p >= 0 else n0 + p
        jlo = q if q >= 0 else 0
        jhi = n1 if q >= 0 else n1 + q
        for i in range(ilo, ihi):
            for j in range(jlo, jhi):
                out[i, j] -= a * u[i - p, j - q]

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled 1-D kernels for the sin^2 interaction and the M1 weight source.

Every routine mirrors a function of the same name in ``_pykernels``; the two
must agree to rounding. Reductions run in a fixed index order so results do
not depend on anything but the inputs.
"""
from libc.math cimport sin, atan, fabs, floor, rint, M_PI

cdef double SNAP = 1e-10

import numpy as np


cdef inline double _sin2(double d, double radius) nogil:
    cdef double a = fabs(d)
    cdef double s
    if a > radius or a == 0.0:
        return 0.0
    s = sin(M_PI * a / radius)
    if d > 0.0:
        return s * s
    return -s * s


cdef inline double _dir(double d) nogil:
    if d > 0.0:
        return atan(d)
    if d < 0.0:
        return -atan(-d)
    return 0.0


def sin2_velocity(const double[::1] targets, const double[::1] sources,
                  const double[::1] weights, double radius):
    cdef Py_ssize_t n = targets.shape[0]
    cdef Py_ssize_t m = sources.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, xi
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            xi = targets[i]
            acc = 0.0
            for j in range(m):
                if weights[j] != 0.0:
                    acc = acc + weights[j] * _sin2(sources[j] - xi, radius)
            o[i] = acc
    return out


def sin2_self_velocity(const double[::1] x, const double[::1] weights, double radius):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double f
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                f = _sin2(x[j] - x[i], radius)
                if f != 0.0:
                    o[i] = o[i] + weights[j] * f
                    o[j] = o[j] - weights[i] * f
    return out


def m1_growth(const double[::1] x, const double[::1] weights, const double[::1] drift,
              double beta):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double g
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                g = (drift[i] + drift[j]) * _dir(x[i] - x[j])
                o[i] = o[i] + weights[j] * g
                o[j] = o[j] - weights[i] * g
        for i in range(n):
            o[i] = 0.5 * beta * o[i]
    return out


def cic_deposit(const double[::1] positions, const double[::1] masses, double left,
                double width, Py_ssize_t ncells):
    """Return (grid masses, index of first out-of-domain position or -1).

    Arrivals within ``SNAP`` cell widths of a centre are put on that centre.
    """
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t i, j
    cdef double s, frac, right = left + width * ncells
    cdef Py_ssize_t bad = -1
    out = np.zeros(ncells, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            if masses[i] == 0.0:
                continue
            if not (positions[i] >= left and positions[i] <= right):
                bad = i
                break
            s = (positions[i] - left) / width - 0.5
            if fabs(s - rint(s)) <= SNAP:
                s = rint(s)
            if s <= 0.0:
                o[0] = o[0] + masses[i]
            elif s >= ncells - 1:
                o[ncells - 1] = o[ncells - 1] + masses[i]
            else:
                j = <Py_ssize_t> floor(s)
                frac = s - j
                o[j] = o[j] + masses[i] * (1.0 - frac)
                o[j + 1] = o[j + 1] + masses[i] * frac
    return out, bad

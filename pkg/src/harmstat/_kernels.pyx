# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: tridiagonal QL eigensolver and batched DOPRI5.

Both routines mirror ``_pure`` step for step; only the execution model
differs (scalar C loops here, numpy vectorisation there).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot, copysign, pow, NAN

cnp.import_array()

cdef double EPS = 2.220446049250313e-16


def ql_eigh(diag, offdiag, int iter_factor=30):
    """Eigen-decomposition of a real symmetric tridiagonal matrix.

    Returns ``(w, v, status)`` with ascending eigenvalues ``w`` and the
    eigenvectors in the columns of ``v``. ``status`` is 0 on success, else
    ``l + 1`` for the eigenvalue index whose iteration cap was exceeded.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_arr = np.array(diag, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e_arr = np.zeros(max(n, 1), dtype=np.float64)
    if n > 1:
        e_arr[: n - 1] = offdiag
    # zt[i, :] is the i-th column of the accumulated rotation (contiguous rows).
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zt_arr = np.eye(n, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef double[::1] e = e_arr
    cdef double[:, ::1] zt = zt_arr
    cdef Py_ssize_t l, m, i, k
    cdef long it, cap = iter_factor * max(n, 1)
    cdef double dd, g, r, s, c, p, f, b, zi, zi1
    cdef bint underflow
    cdef int status = 0

    with nogil:
        for l in range(n):
            it = 0
            while True:
                m = l
                while m < n - 1:
                    dd = fabs(d[m]) + fabs(d[m + 1])
                    if fabs(e[m]) <= EPS * dd:
                        break
                    m += 1
                if m == l:
                    break
                it += 1
                if it > cap:
                    status = <int>(l + 1)
                    break
                g = (d[l + 1] - d[l]) / (2.0 * e[l])
                r = hypot(g, 1.0)
                g = d[m] - d[l] + e[l] / (g + copysign(r, g))
                s = 1.0
                c = 1.0
                p = 0.0
                underflow = False
                i = m - 1
                while i >= l:
                    f = s * e[i]
                    b = c * e[i]
                    r = hypot(f, g)
                    e[i + 1] = r
                    if r == 0.0:
                        d[i + 1] -= p
                        e[m] = 0.0
                        underflow = True
                        break
                    s = f / r
                    c = g / r
                    g = d[i + 1] - p
                    r = (d[i] - g) * s + 2.0 * c * b
                    p = s * r
                    d[i + 1] = g + p
                    g = c * r - b
                    for k in range(n):
                        zi = zt[i, k]
                        zi1 = zt[i + 1, k]
                        zt[i + 1, k] = s * zi + c * zi1
                        zt[i, k] = c * zi - s * zi1
                    i -= 1
                if underflow:
                    continue
                d[l] -= p
                e[l] = g
                e[m] = 0.0
            if status:
                break

    order = np.argsort(d_arr, kind="stable")
    return d_arr[order], np.ascontiguousarray(zt_arr[order].T), status


# Dormand-Prince 5(4) tableau.
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline void _rhs(const double* y, double* f, int order, double g) noexcept nogil:
    # y = (Re a1, Im a1, Re aN, Im aN); a1' = -i g N conj(a1)^(N-1) aN, aN' = -i g a1^N
    cdef double pr = 1.0, pi = 0.0, tr
    cdef int j
    for j in range(order - 1):
        tr = pr * y[0] - pi * y[1]
        pi = pr * y[1] + pi * y[0]
        pr = tr
    cdef double qr = pr * y[2] + pi * y[3]
    cdef double qi = pr * y[3] - pi * y[2]
    cdef double sr = pr * y[0] - pi * y[1]
    cdef double si = pr * y[1] + pi * y[0]
    f[0] = g * order * qi
    f[1] = -g * order * qr
    f[2] = g * si
    f[3] = -g * sr


cdef inline double _err_norm(const double* y, const double* yn, const double* err,
                             double rtol, double atol) noexcept nogil:
    cdef double acc = 0.0, sc, q
    cdef int j
    for j in range(4):
        sc = atol + rtol * (fabs(y[j]) if fabs(y[j]) > fabs(yn[j]) else fabs(yn[j]))
        q = err[j] / sc
        acc += q * q
    return sqrt(acc / 4.0)


cdef double _integrate_one(double* y, double[:, ::1] out, const double[::1] times,
                           int order, double g, double rtol, double atol,
                           long max_steps) noexcept nogil:
    """Integrate one trajectory in place; returns NAN on success else failing time."""
    cdef Py_ssize_t nt = times.shape[0], idx = 1
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double k7[4]
    cdef double yt[4]
    cdef double yn[4]
    cdef double er[4]
    cdef double t = times[0], h, h_try, h_prop, d0, d1, sc, errn, fac, target
    cdef long steps = 0
    cdef int j
    cdef bint clipped, rejected

    for j in range(4):
        out[0, j] = y[j]
    if nt == 1:
        return NAN

    _rhs(y, k1, order, g)
    d0 = 0.0
    d1 = 0.0
    for j in range(4):
        sc = atol + rtol * fabs(y[j])
        d0 += (y[j] / sc) * (y[j] / sc)
        d1 += (k1[j] / sc) * (k1[j] / sc)
    d0 = sqrt(d0 / 4.0)
    d1 = sqrt(d1 / 4.0)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    if not (h > 0.0 and h < 1e300):  # inf/inf when the tolerances underflow
        h = 1e-6
    if h > times[nt - 1] - t:
        h = times[nt - 1] - t

    rejected = False
    while idx < nt:
        target = times[idx]
        h_prop = h
        clipped = False
        if t + h >= target:
            h_try = target - t
            clipped = True
        else:
            h_try = h
        if h_try < 16.0 * EPS * (fabs(t) if fabs(t) > 1.0 else 1.0) and not clipped:
            return t
        steps += 1
        if steps > max_steps:
            return t

        for j in range(4):
            yt[j] = y[j] + h_try * A21 * k1[j]
        _rhs(yt, k2, order, g)
        for j in range(4):
            yt[j] = y[j] + h_try * (A31 * k1[j] + A32 * k2[j])
        _rhs(yt, k3, order, g)
        for j in range(4):
            yt[j] = y[j] + h_try * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j])
        _rhs(yt, k4, order, g)
        for j in range(4):
            yt[j] = y[j] + h_try * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j])
        _rhs(yt, k5, order, g)
        for j in range(4):
            yt[j] = y[j] + h_try * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j]
                                    + A64 * k4[j] + A65 * k5[j])
        _rhs(yt, k6, order, g)
        for j in range(4):
            yn[j] = y[j] + h_try * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j]
                                    + B5 * k5[j] + B6 * k6[j])
        _rhs(yn, k7, order, g)
        for j in range(4):
            er[j] = h_try * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j]
                             + E6 * k6[j] + E7 * k7[j])
        errn = _err_norm(y, yn, er, rtol, atol)

        if errn <= 1.0:
            if errn == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(errn, -0.2)
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            if rejected and fac > 1.0:
                fac = 1.0
            rejected = False
            if clipped:
                t = target
            else:
                t = t + h_try
            for j in range(4):
                y[j] = yn[j]
                k1[j] = k7[j]
            h = h_try * fac
            if clipped:
                if h < h_prop:
                    h = h_prop
                for j in range(4):
                    out[idx, j] = y[j]
                idx += 1
        else:
            fac = 0.9 * pow(errn, -0.2)
            if not fac >= 0.2:  # also catches NaN from a non-finite error estimate
                fac = 0.2
            h = h_try * fac
            rejected = True
    return NAN


def dopri5_batch(y0, int order, double g, times, double rtol, double atol,
                 long max_steps=10_000_000):
    """Integrate every row of ``y0`` (shape (M, 4)) onto the output ``times``.

    Returns ``(out, fail)`` with ``out`` of shape (M, T, 4) and ``fail[i]``
    NaN for a successful trajectory, else the time where its step collapsed.
    """
    cdef double[:, ::1] y0v = np.ascontiguousarray(y0, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t m = y0v.shape[0], nt = tv.shape[0], i, j
    out_arr = np.empty((m, nt, 4), dtype=np.float64)
    fail_arr = np.empty(m, dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] fail = fail_arr
    cdef double y[4]
    with nogil:
        for i in range(m):
            for j in range(4):
                y[j] = y0v[i, j]
            fail[i] = _integrate_one(y, out[i], tv, order, g, rtol, atol, max_steps)
    return out_arr, fail_arr

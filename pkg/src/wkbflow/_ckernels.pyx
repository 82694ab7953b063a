# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``.

Same functions, same arguments, same return values; only the inner loops
are typed.  Keep the two files in step.
"""
import math

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, fabs, copysign, pow, INFINITY

cnp.import_array()

from . import _pykernels
from ._pykernels import GL_NODES, GL_WEIGHTS, STATUS_DONE, STATUS_CLEARANCE, STATUS_UNDERFLOW, \
    STATUS_MAX_STEPS, STATUS_RADIUS

ctypedef double complex cplx

cdef double _C_A[7][6]
cdef double _C_E[7]
cdef double _GLX[8]
cdef double _GLW[8]


def _init_tables():
    # tableaux come from the reference module so the two backends cannot drift
    a = _pykernels._A
    e = _pykernels._E
    cdef int i, j
    for i in range(7):
        for j in range(6):
            _C_A[i][j] = a[i][j] if j < len(a[i]) else 0.0
        _C_E[i] = e[i]
    for i in range(8):
        _GLX[i] = GL_NODES[i]
        _GLW[i] = GL_WEIGHTS[i]


_init_tables()


cdef inline cplx _csqrt(cplx q) noexcept nogil:
    """Principal square root (same branch as ``cmath.sqrt``)."""
    cdef double a = q.real, b = q.imag, r, t
    if a == 0.0 and b == 0.0:
        return q
    r = hypot(a, b)
    if a >= 0.0:
        t = sqrt(0.5 * (r + a))
        return t + 1j * (b / (2.0 * t))
    t = sqrt(0.5 * (r - a))
    return fabs(b) / (2.0 * t) + 1j * copysign(t, b)


cdef inline cplx _aligned(cplx q, cplx ref) noexcept nogil:
    cdef cplx s = _csqrt(q)
    if s.real * ref.real + s.imag * ref.imag < 0.0:
        return -s
    return s


cdef inline cplx _horner_p(const cplx *cf, Py_ssize_t n, cplx x) noexcept nogil:
    # real arithmetic avoids the C99 complex multiply with its inf/nan checks
    cdef Py_ssize_t k
    cdef double ar = 0.0, ai = 0.0, xr = x.real, xi = x.imag, t
    for k in range(n - 1, -1, -1):
        t = ar * xr - ai * xi + cf[k].real
        ai = ar * xi + ai * xr + cf[k].imag
        ar = t
    return ar + 1j * ai


cdef inline cplx _horner_c(cplx[::1] cf, cplx x) noexcept nogil:
    return _horner_p(&cf[0], cf.shape[0], x)


cdef inline double _cabs(cplx z) noexcept nogil:
    return hypot(z.real, z.imag)


def horner(coeffs, x):
    """Evaluate the ascending-order polynomial ``coeffs`` at ``x``."""
    cdef cplx[::1] cf = np.ascontiguousarray(coeffs, dtype=complex)
    xa = np.asarray(x, dtype=complex)
    flat = np.ascontiguousarray(xa.ravel())
    cdef cplx[::1] xv = flat
    out = np.empty_like(flat)
    cdef cplx[::1] ov = out
    cdef Py_ssize_t i, n = cf.shape[0]
    cdef const cplx *cp = &cf[0]
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = _horner_p(cp, n, xv[i])
    return out.reshape(xa.shape)


def align_sqrt_sequence(qvals, ref):
    """Continue ``sqrt`` along a sequence of ``Q`` values starting next to ``ref``."""
    cdef cplx[::1] q = np.ascontiguousarray(qvals, dtype=complex)
    out = np.empty(q.shape[0], dtype=complex)
    cdef cplx[::1] ov = out
    cdef cplx prev = complex(ref)
    cdef Py_ssize_t k
    with nogil:
        for k in range(q.shape[0]):
            prev = _aligned(q[k], prev)
            ov[k] = prev
    return out


def linear_recurrence(a, b, g0):
    """Return ``G`` with ``G[0] = g0`` and ``G[k+1] = a[k] G[k] + b[k]``."""
    cdef cplx[::1] av = np.ascontiguousarray(a, dtype=complex)
    cdef cplx[::1] bv = np.ascontiguousarray(b, dtype=complex)
    cdef Py_ssize_t n = av.shape[0], k
    out = np.empty(n + 1, dtype=complex)
    cdef cplx[::1] ov = out
    cdef cplx g = complex(g0)
    ov[0] = g
    with nogil:
        for k in range(n):
            g = av[k] * g + bv[k]
            ov[k + 1] = g
    return out


cdef void _geometry(cplx y, cplx[::1] rts, double[::1] ms, double *tot, double *dmin, int *imin) noexcept nogil:
    cdef Py_ssize_t i
    cdef double dist
    tot[0] = 0.0
    dmin[0] = INFINITY
    imin[0] = -1
    for i in range(rts.shape[0]):
        dist = _cabs(y - rts[i])
        if dist < dmin[0]:
            dmin[0] = dist
            imin[0] = <int>i
        tot[0] += ms[i] / (dist if dist > 1e-300 else 1e-300)


def flow_integrate(coeffs, roots, mults, y0, sqrt0, direction, s_end,
                   rtol=1e-10, eta=0.02, clearance=1e-3, stop_radius=math.inf,
                   s_min=0.0, max_steps=200000, first_step=0.0):
    """Integrate ``dy/ds = direction / sqrt(Q(y))`` from ``s = 0`` to ``s_end``.

    See ``_pykernels.flow_integrate`` for the method and return values.
    """
    cdef cplx[::1] cf = np.ascontiguousarray(coeffs, dtype=complex)
    cdef cplx[::1] rts = np.ascontiguousarray(roots, dtype=complex).reshape(-1)
    cdef double[::1] ms = np.ascontiguousarray(mults, dtype=float).reshape(-1)
    cdef cplx d = complex(direction)
    cdef cplx y = complex(y0)
    cdef cplx sq = complex(sqrt0)
    cdef double s = 0.0
    cdef double c_s_end = s_end, c_rtol = rtol, c_eta = eta, c_clear = clearance
    cdef double c_stop = stop_radius, c_smin = s_min, c_first = first_step
    cdef long c_max = max_steps
    cdef double tot, dmin, cap, ds, scale, en, fac
    cdef int imin, status = STATUS_DONE, index = -1
    cdef bint last, ok
    cdef long steps = 0
    cdef cplx k[7]
    cdef cplx yi, qi, y_new, err, dy, inc, sq_new, vel
    cdef int i, j

    ss = [0.0]
    ys = [y]
    qs = [sq]

    _geometry(y, rts, ms, &tot, &dmin, &imin)
    if dmin < c_clear:
        return (np.array(ss), np.array(ys), np.array(qs), STATUS_CLEARANCE, imin)
    if c_s_end <= 0.0:
        return (np.array(ss), np.array(ys), np.array(qs), STATUS_DONE, -1)

    ds = c_first if c_first > 0.0 else c_eta * _cabs(sq) / tot
    while True:
        _geometry(y, rts, ms, &tot, &dmin, &imin)
        cap = c_eta * _cabs(sq) / tot
        if ds > cap:
            ds = cap
        last = False
        if s + ds >= c_s_end:
            ds = c_s_end - s
            last = True
            if ds <= 1e-14 * max(1.0, s):
                ss[-1] = c_s_end
                status = STATUS_DONE
                break
        if ds <= 1e-14 * max(1.0, s):
            status = STATUS_UNDERFLOW
            break
        k[0] = d / sq
        ok = True
        for i in range(1, 7):
            yi = y
            for j in range(i):
                yi = yi + ds * _C_A[i][j] * k[j]
            qi = _horner_c(cf, yi)
            if qi == 0:
                ok = False
                break
            k[i] = d / _aligned(qi, sq)
        if not ok:
            ds *= 0.25
            continue
        y_new = y
        for j in range(6):
            y_new = y_new + ds * _C_A[6][j] * k[j]
        err = 0
        for j in range(7):
            err = err + ds * _C_E[j] * k[j]
        scale = c_rtol * max(_cabs(y), _cabs(y_new), 1e-300) + 1e-300
        en = _cabs(err) / scale
        if en > 1.0:
            ds *= max(0.2, 0.9 * pow(en, -0.2))
            continue
        dy = y_new - y
        inc = 0
        for j in range(8):
            inc = inc + _GLW[j] * _aligned(_horner_c(cf, y + _GLX[j] * dy), sq)
        inc = inc * dy
        sq_new = _aligned(_horner_c(cf, y_new), sq)
        y_new = y_new - (inc - d * ds) / sq_new
        sq_new = _aligned(_horner_c(cf, y_new), sq)
        y = y_new
        sq = sq_new
        s = c_s_end if last else s + ds
        ss.append(s)
        ys.append(y)
        qs.append(sq)
        steps += 1
        _geometry(y, rts, ms, &tot, &dmin, &imin)
        if dmin < c_clear:
            status = STATUS_CLEARANCE
            index = imin
            break
        if last:
            status = STATUS_DONE
            break
        if s >= c_smin and _cabs(y) >= c_stop:
            vel = d / sq
            if y.real * vel.real + y.imag * vel.imag > 0.0:
                status = STATUS_RADIUS
                break
        if steps >= c_max:
            status = STATUS_MAX_STEPS
            break
        fac = 5.0 if en == 0.0 else min(5.0, 0.9 * pow(en, -0.2))
        ds *= fac
    return (np.array(ss), np.array(ys), np.array(qs), status, index)

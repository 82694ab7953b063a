"""Pure Python implementations of the hot loops.

These are the reference versions; ``_ckernels.pyx`` mirrors them line by
line.  All functions take plain Python / numpy inputs and return numpy
arrays so that the two backends are interchangeable.
"""
import cmath
import math

import numpy as np

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# 8-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
GL_NODES = tuple(0.5 * (_GL_X + 1.0))
GL_WEIGHTS = tuple(0.5 * _GL_W)

STATUS_DONE = 0
STATUS_CLEARANCE = 1
STATUS_UNDERFLOW = 2
STATUS_MAX_STEPS = 3
STATUS_RADIUS = 4


def horner(coeffs, x):
    """Evaluate the ascending-order polynomial ``coeffs`` at ``x``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    x = np.asarray(x, dtype=complex)
    out = np.zeros_like(x)
    for c in coeffs[::-1]:
        out = out * x + c
    return out


def _horner_scalar(coeffs, x):
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _aligned_sqrt(q, ref):
    s = cmath.sqrt(q)
    if (s.real * ref.real + s.imag * ref.imag) < 0.0:
        return -s
    return s


def align_sqrt_sequence(qvals, ref):
    """Continue ``sqrt`` along a sequence of ``Q`` values starting next to ``ref``.

    Each value takes the square root whose sign is closest to the previous
    one, so the result is a continuous branch provided consecutive
    arguments of ``Q`` differ by less than ``pi``.
    """
    qvals = np.asarray(qvals, dtype=complex)
    out = np.empty_like(qvals)
    prev = complex(ref)
    for k in range(qvals.shape[0]):
        prev = _aligned_sqrt(complex(qvals[k]), prev)
        out[k] = prev
    return out


def linear_recurrence(a, b, g0):
    """Return ``G`` with ``G[0] = g0`` and ``G[k+1] = a[k] G[k] + b[k]``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = a.shape[0]
    out = np.empty(n + 1, dtype=complex)
    g = complex(g0)
    out[0] = g
    for k in range(n):
        g = a[k] * g + b[k]
        out[k + 1] = g
    return out


def flow_integrate(coeffs, roots, mults, y0, sqrt0, direction, s_end,
                   rtol=1e-10, eta=0.02, clearance=1e-3, stop_radius=math.inf,
                   s_min=0.0, max_steps=200000, first_step=0.0):
    """Integrate ``dy/ds = direction / sqrt(Q(y))`` from ``s = 0`` to ``s_end``.

    Adaptive Dormand-Prince 5(4) with a projection after every accepted
    step: the Gauss-Legendre action increment over the step is forced to
    equal ``direction * ds`` by one Newton correction, so the exact first
    integral of the flow is preserved without drift.

    The step is additionally capped so that ``|dy| * sum(mult / |y - r|)``
    stays below ``eta``; this keeps the square-root branch unambiguous
    within a step and makes the samples dense enough for cubic Hermite
    interpolation.

    Returns ``(s, y, sqrt_y, status, index)`` where ``status`` is one of the
    ``STATUS_*`` codes and ``index`` is the offending root for
    ``STATUS_CLEARANCE``.
    """
    cf = [complex(c) for c in coeffs]
    rts = [complex(r) for r in roots]
    ms = [float(m) for m in mults]
    d = complex(direction)
    y = complex(y0)
    sq = complex(sqrt0)
    s = 0.0
    ss = [0.0]
    ys = [y]
    qs = [sq]
    status = STATUS_DONE
    index = -1

    def geometry(yv):
        tot = 0.0
        dmin = math.inf
        imin = -1
        for i, r in enumerate(rts):
            dist = abs(yv - r)
            if dist < dmin:
                dmin = dist
                imin = i
            tot += ms[i] / max(dist, 1e-300)
        return tot, dmin, imin

    tot, dmin, imin = geometry(y)
    if dmin < clearance:
        return (np.array(ss), np.array(ys), np.array(qs), STATUS_CLEARANCE, imin)
    if s_end <= 0.0:
        return (np.array(ss), np.array(ys), np.array(qs), STATUS_DONE, -1)

    ds = first_step if first_step > 0.0 else eta * abs(sq) / tot
    k = [0j] * 7
    steps = 0
    while True:
        tot, dmin, imin = geometry(y)
        cap = eta * abs(sq) / tot
        if ds > cap:
            ds = cap
        last = False
        if s + ds >= s_end:
            ds = s_end - s
            last = True
            if ds <= 1e-14 * max(1.0, s):
                ss[-1] = s_end
                status = STATUS_DONE
                break
        if ds <= 1e-14 * max(1.0, s):
            status = STATUS_UNDERFLOW
            break
        # stages, all square roots aligned with the current one
        k[0] = d / sq
        ok = True
        for i in range(1, 7):
            yi = y
            for j in range(i):
                yi += ds * _A[i][j] * k[j]
            qi = _horner_scalar(cf, yi)
            if qi == 0:
                ok = False
                break
            k[i] = d / _aligned_sqrt(qi, sq)
        if not ok:
            ds *= 0.25
            continue
        y_new = y
        for j in range(6):
            y_new += ds * _A[6][j] * k[j]
        err = 0j
        for j in range(7):
            err += ds * _E[j] * k[j]
        scale = rtol * max(abs(y), abs(y_new), 1e-300) + 1e-300
        en = abs(err) / scale
        if en > 1.0:
            ds *= max(0.2, 0.9 * en ** -0.2)
            continue
        # projection onto the action level set
        dy = y_new - y
        inc = 0j
        for xg, wg in zip(GL_NODES, GL_WEIGHTS):
            inc += wg * _aligned_sqrt(_horner_scalar(cf, y + xg * dy), sq)
        inc *= dy
        sq_new = _aligned_sqrt(_horner_scalar(cf, y_new), sq)
        y_new -= (inc - d * ds) / sq_new
        sq_new = _aligned_sqrt(_horner_scalar(cf, y_new), sq)
        y = y_new
        sq = sq_new
        s = s_end if last else s + ds
        ss.append(s)
        ys.append(y)
        qs.append(sq)
        steps += 1
        tot, dmin, imin = geometry(y)
        if dmin < clearance:
            status = STATUS_CLEARANCE
            index = imin
            break
        if last:
            status = STATUS_DONE
            break
        if s >= s_min and abs(y) >= stop_radius:
            vel = d / sq
            if (y.real * vel.real + y.imag * vel.imag) > 0.0:
                status = STATUS_RADIUS
                break
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        fac = 5.0 if en == 0.0 else min(5.0, 0.9 * en ** -0.2)
        ds *= fac
    return (np.array(ss), np.array(ys), np.array(qs), status, index)

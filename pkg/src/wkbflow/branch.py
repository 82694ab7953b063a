"""Branch-consistent square roots of Q along paths, and the action integral.

Every sign choice for ``sqrt(Q)`` in the package is made here.  A branch
is carried along a polyline by continuity: consecutive values are chosen
so that their relative angle stays small, and segments are refined until
the argument of ``Q`` cannot turn by more than ``pi/4`` across any of
them.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BranchError, ConfigError, QuadratureError
from .polynomial import ComplexPolynomial, TurningPoint, find_turning_points, geometry_scale

_ARG_BUDGET = math.pi / 4

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_GK_X = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights placed on the Kronrod grid (odd positions of _XGK)
_G_W = np.zeros(15)
_G_W[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def gauss_kronrod(f, a=0.0, b=1.0, tol=1e-13, max_intervals=4000):
    """Adaptive 7/15-point Gauss-Kronrod integral of a complex integrand.

    ``f`` must accept a real numpy array and return complex values.  The
    interval with the largest error estimate is bisected until the total
    estimate is below ``tol * max(1, |I|)``.

    Returns
    -------
    value, error_estimate
    """
    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        vals = np.asarray(f(mid + half * _GK_X), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand is not finite on [%g, %g]" % (lo, hi))
        k = half * np.dot(_GK_W, vals)
        g = half * np.dot(_G_W, vals)
        return k, abs(k - g)

    v, e = panel(a, b)
    panels = [(e, a, b, v)]
    total, err = v, e
    while err > tol * max(1.0, abs(total)):
        if len(panels) >= max_intervals:
            raise QuadratureError("adaptive quadrature did not converge",
                                  estimate=complex(total), error=float(err))
        idx = max(range(len(panels)), key=lambda i: panels[i][0])
        e0, lo, hi, v0 = panels.pop(idx)
        mid = 0.5 * (lo + hi)
        v1, e1 = panel(lo, mid)
        v2, e2 = panel(mid, hi)
        panels += [(e1, lo, mid, v1), (e2, mid, hi, v2)]
        total = sum(p[3] for p in panels)
        err = sum(p[0] for p in panels)
    return complex(total), float(err)


def aligned_sqrt(q, ref):
    """Square roots of ``q`` with the sign closest to ``ref`` (elementwise)."""
    s = np.sqrt(np.asarray(q, dtype=complex))
    ref = np.asarray(ref, dtype=complex)
    flip = (s.real * ref.real + s.imag * ref.imag) < 0.0
    return np.where(flip, -s, s)


def segment_integrals(Q: ComplexPolynomial, y0, y1, ref_sqrt, power=1):
    """Fixed 8-point Gauss-Legendre integrals of ``sqrt(Q)**power`` on segments.

    Each segment ``y0[k] -> y1[k]`` is integrated with the root aligned to
    ``ref_sqrt[k]``; segments must be short enough for that alignment to
    be unambiguous (the callers use grid edges or flow steps).
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=complex))
    y1 = np.atleast_1d(np.asarray(y1, dtype=complex))
    ref = np.broadcast_to(np.asarray(ref_sqrt, dtype=complex), y0.shape)
    dy = y1 - y0
    nodes = y0[:, None] + dy[:, None] * (0.5 * (_GL8_X[None, :] + 1.0))
    sq = aligned_sqrt(Q(nodes), ref[:, None])
    return 0.5 * dy * np.sum(_GL8_W[None, :] * sq ** power, axis=1)


@dataclass(frozen=True)
class BranchedPath:
    """A refined polyline with a continuous branch of ``sqrt(Q)`` on it.

    ``user_index[k]`` is the position in ``waypoints`` of the k-th point
    supplied by the caller.
    """

    waypoints: np.ndarray
    sqrt_values: np.ndarray
    base_sign: int
    user_index: np.ndarray
    starts_at_turning_point: bool = False

    @property
    def end_sqrt(self) -> complex:
        return complex(self.sqrt_values[-1])

    def flipped(self) -> "BranchedPath":
        return BranchedPath(self.waypoints, -self.sqrt_values, -self.base_sign,
                            self.user_index, self.starts_at_turning_point)

    def to_json(self):
        return {
            "waypoints": [[z.real, z.imag] for z in self.waypoints],
            "sqrt_values": [[z.real, z.imag] for z in self.sqrt_values],
            "base_sign": self.base_sign,
        }


def _roots_of(Q, turning_points):
    if turning_points is None:
        turning_points = find_turning_points(Q)
    return turning_points


def _segment_distance(p0, p1, r):
    d = p1 - p0
    L2 = (d * d.conjugate()).real
    if L2 == 0.0:
        return abs(p0 - r)
    s = min(1.0, max(0.0, ((r - p0) * d.conjugate()).real / L2))
    return abs(p0 + s * d - r)


def continue_sqrt(Q: ComplexPolynomial, path, base_sign: int = 1, clearance: float | None = None,
                  turning_points=None, start_sqrt: complex | None = None) -> BranchedPath:
    """Carry a branch of ``sqrt(Q)`` continuously along a polyline.

    Parameters
    ----------
    Q : ComplexPolynomial
    path : sequence of complex
        Waypoints.  Only the first one may be a turning point.
    base_sign : {+1, -1}
        At the first waypoint that is not a turning point, ``+1`` selects the
        principal square root and ``-1`` its negative.  Ignored when
        ``start_sqrt`` is given.
    clearance : float, optional
        Minimum distance between the path and any turning point (except at
        a turning point it starts from).  Defaults to ``1e-3`` times the
        geometry scale.
    start_sqrt : complex, optional
        Branch value at the first waypoint to continue from.

    Raises
    ------
    BranchError
        If a segment comes within ``clearance`` of a turning point.
    """
    if base_sign not in (1, -1):
        raise ConfigError("base_sign must be +1 or -1", base_sign=base_sign)
    pts = [complex(p) for p in path]
    if not pts:
        raise ConfigError("empty path")
    tps = _roots_of(Q, turning_points)
    roots = [tp.location for tp in tps]
    mults = [tp.multiplicity for tp in tps]
    if clearance is None:
        clearance = 1e-3 * geometry_scale(tps)

    start_tp = None
    for i, r in enumerate(roots):
        if abs(pts[0] - r) <= 1e-12 * max(1.0, abs(r)):
            start_tp = i
            pts[0] = r
            break

    refined = [pts[0]]
    user_index = [0]
    for k in range(1, len(pts)):
        p0, p1 = pts[k - 1], pts[k]
        skip = start_tp if k == 1 else None
        stack = [(p0, p1)]
        pieces = []
        while stack:
            a, b = stack.pop()
            L = abs(b - a)
            budget = 0.0
            for i, r in enumerate(roots):
                if i == skip and a == pts[0]:
                    continue
                d = _segment_distance(a, b, r)
                if d < clearance:
                    raise BranchError("path passes within the clearance of a turning point",
                                      segment=k - 1, turning_point=r, distance=d)
                budget += mults[i] / d
            if L * budget > _ARG_BUDGET:
                m = 0.5 * (a + b)
                stack.append((m, b))
                stack.append((a, m))
            else:
                pieces.append(b)
        refined.extend(pieces)
        user_index.append(len(refined) - 1)

    wp = np.array(refined, dtype=complex)
    qv = Q(wp)
    if start_tp is not None:
        if len(wp) == 1:
            return BranchedPath(wp, np.zeros(1, dtype=complex), base_sign,
                                np.array(user_index), True)
        first = cmath.sqrt(qv[1]) * base_sign if start_sqrt is None else complex(start_sqrt)
        tail = kernels.align_sqrt_sequence(qv[1:], first)
        sq = np.concatenate([[0j], tail])
    else:
        if qv[0] == 0:
            raise BranchError("path starts at a zero of Q that is not a turning point", point=wp[0])
        first = cmath.sqrt(qv[0]) * base_sign if start_sqrt is None else complex(start_sqrt)
        sq = kernels.align_sqrt_sequence(qv, first)
    return BranchedPath(wp, sq, base_sign, np.array(user_index), start_tp is not None)


@dataclass(frozen=True)
class ActionValue:
    value: complex
    base: TurningPoint | None
    endpoint: complex
    path: BranchedPath = field(repr=False)
    error: float = 0.0

    @property
    def sqrt_end(self) -> complex:
        return self.path.end_sqrt


def path_integral(Q: ComplexPolynomial, bp: BranchedPath, tol: float = 1e-13):
    """Integral of the tracked ``sqrt(Q)`` along a branched path.

    Returns the cumulative integral at every refined waypoint and the
    accumulated error estimate.
    """
    wp, sq = bp.waypoints, bp.sqrt_values
    out = np.zeros(len(wp), dtype=complex)
    err = 0.0
    for k in range(1, len(wp)):
        p0, p1 = wp[k - 1], wp[k]
        d = p1 - p0
        if k == 1 and bp.starts_at_turning_point:
            ref = sq[1]

            def f(s, p0=p0, d=d, ref=ref):
                tau = p0 + d * s * s
                return aligned_sqrt(Q(tau), ref) * (2.0 * d * s)
        else:
            ref = sq[k - 1]

            def f(s, p0=p0, d=d, ref=ref):
                return aligned_sqrt(Q(p0 + d * s), ref) * d
        v, e = gauss_kronrod(f, 0.0, 1.0, tol=tol)
        out[k] = out[k - 1] + v
        err += e
    return out, err


def action(Q: ComplexPolynomial, a, x, path=None, base_sign: int = 1, clearance: float | None = None,
           turning_points=None, tol: float = 1e-13) -> ActionValue:
    """The action ``S_a(x)``: integral of ``sqrt(Q)`` from ``a`` to ``x``.

    Parameters
    ----------
    a : TurningPoint or complex
        Start of the path (normally a turning point).
    x : complex
        End point.
    path : sequence of complex, optional
        Full waypoint list from ``a`` to ``x``; a straight segment by default.
    base_sign : {+1, -1}
        Branch flag, see :func:`continue_sqrt`.

    Notes
    -----
    On the segment leaving a turning point the substitution
    ``tau = a + (p - a) s**2`` turns the ``|tau - a|**(r/2)`` endpoint
    behaviour into a polynomial in ``s``.
    """
    a_loc = a.location if isinstance(a, TurningPoint) else complex(a)
    x = complex(x)
    if path is None:
        path = [a_loc, x]
    path = [complex(p) for p in path]
    if abs(path[0] - a_loc) > 1e-12 * max(1.0, abs(a_loc)) or abs(path[-1] - x) > 1e-12 * max(1.0, abs(x)):
        raise ConfigError("path must start at a and end at x")
    if len(path) == 2 and path[0] == path[1]:
        bp = continue_sqrt(Q, path[:1], base_sign, clearance, turning_points)
        return ActionValue(0j, a if isinstance(a, TurningPoint) else None, x, bp)
    bp = continue_sqrt(Q, path, base_sign, clearance, turning_points)
    cum, err = path_integral(Q, bp, tol)
    return ActionValue(complex(cum[-1]), a if isinstance(a, TurningPoint) else None, x, bp, err)


@dataclass(frozen=True)
class BranchPoint:
    """A point with its branch data: ``sqrt(Q)``, the action and a fourth root.

    ``quarter`` is a continuous branch of ``Q**(1/4)``; it is shared by both
    signs of the square root, so ``flipped`` leaves it unchanged.
    """

    x: complex
    sqrt: complex
    action: complex
    quarter: complex

    def flipped(self) -> "BranchPoint":
        return BranchPoint(self.x, -self.sqrt, -self.action, self.quarter)

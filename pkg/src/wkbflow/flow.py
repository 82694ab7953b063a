"""The path flow ``y' = 1/sqrt(Q(y))`` and its sampled orbits.

Along an orbit the action advances exactly with flow time,
``S(phi(z, x)) = S(x) + z``.  The integrator enforces this first
integral after every step, so long orbits do not drift off their level
set.
"""
from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .branch import BranchedPath, aligned_sqrt, gauss_kronrod
from .errors import BranchError, ConfigError, FlowError
from .polynomial import ComplexPolynomial, cached_turning_points, geometry_scale

_STATUS_NAMES = {
    kernels.STATUS_DONE: "done",
    kernels.STATUS_CLEARANCE: "clearance",
    kernels.STATUS_UNDERFLOW: "underflow",
    kernels.STATUS_MAX_STEPS: "max_steps",
    kernels.STATUS_RADIUS: "radius",
}


def default_clearance(Q: ComplexPolynomial) -> float:
    return 1e-3 * geometry_scale(cached_turning_points(Q))


def _start_sqrt(Q, x, branch_sign, sqrt_x):
    if sqrt_x is not None:
        return complex(sqrt_x)
    if branch_sign not in (1, -1):
        raise ConfigError("branch_sign must be +1 or -1", branch_sign=branch_sign)
    q = Q(complex(x))
    if q == 0:
        raise BranchError("flow started at a turning point", point=complex(x))
    return branch_sign * cmath.sqrt(q)


@dataclass
class FlowTrajectory:
    """Samples of ``phi(z, x0)`` along the ray ``z = direction * s``, ``s >= 0``.

    Attributes
    ----------
    s : ndarray
        Flow-parameter magnitudes, increasing from 0.
    y, sqrt_y : ndarray
        Orbit points and the continued branch of ``sqrt(Q)`` there.
    status : str
        Why integration stopped (``done``, ``clearance``, ``radius``, ...).
    """

    Q: ComplexPolynomial = field(repr=False)
    x0: complex
    sqrt0: complex
    direction: complex
    s: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    sqrt_y: np.ndarray = field(repr=False)
    status: str = "done"
    stop_index: int = -1

    @property
    def z(self) -> np.ndarray:
        return self.direction * self.s

    @property
    def t(self) -> np.ndarray:
        """Real flow time (meaningful for real directions)."""
        return (self.direction * self.s).real

    @property
    def t_reach(self) -> float:
        return float(self.s[-1])

    @property
    def branch(self) -> BranchedPath:
        return BranchedPath(self.y, self.sqrt_y, 1, np.arange(len(self.y)))

    def velocity(self) -> np.ndarray:
        """``dy/ds`` at the samples."""
        return self.direction / self.sqrt_y

    def interpolate(self, s):
        """Cubic Hermite interpolation of the orbit at parameter values ``s``."""
        s = np.asarray(s, dtype=float)
        k = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        s0 = self.s[k]
        ds = self.s[k + 1] - s0
        r = (s - s0) / ds
        v = self.velocity()
        h00 = (1 + 2 * r) * (1 - r) ** 2
        h10 = r * (1 - r) ** 2
        h01 = r * r * (3 - 2 * r)
        h11 = r * r * (r - 1)
        return (h00 * self.y[k] + h10 * ds * v[k] + h01 * self.y[k + 1] + h11 * ds * v[k + 1])

    def to_csv(self, fh=None) -> str:
        """CSV dump with columns ``t, re_y, im_y, re_sqrt, im_sqrt``."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re_y", "im_y", "re_sqrt", "im_sqrt"])
        for t, y, q in zip(self.t, self.y, self.sqrt_y):
            w.writerow([repr(float(v)) for v in (t, y.real, y.imag, q.real, q.imag)])
        return buf.getvalue() if fh is None else ""


def integrate(Q: ComplexPolynomial, x, direction, s_end, branch_sign=1, sqrt_x=None, *,
              eta=0.02, rtol=1e-11, clearance=None, stop_radius=math.inf, s_min=0.0,
              max_steps=200000, turning_points=None) -> FlowTrajectory:
    """Integrate the flow along ``z = direction * s`` for ``0 <= s <= s_end``.

    Never raises on early termination; inspect ``status`` instead.
    """
    tps = cached_turning_points(Q) if turning_points is None else turning_points
    if clearance is None:
        clearance = 1e-3 * geometry_scale(tps)
    d = complex(direction)
    if abs(abs(d) - 1.0) > 1e-12:
        raise ConfigError("direction must have unit modulus", direction=d)
    x = complex(x)
    sq0 = _start_sqrt(Q, x, branch_sign, sqrt_x)
    s, y, sq, status, idx = kernels.flow_integrate(
        Q.coefficients, [tp.location for tp in tps], [tp.multiplicity for tp in tps],
        x, sq0, d, float(s_end), rtol, eta, clearance, stop_radius, s_min, max_steps)
    return FlowTrajectory(Q, x, sq0, d, np.asarray(s), np.asarray(y), np.asarray(sq),
                          _STATUS_NAMES[status], int(idx))


def _require_done(traj: FlowTrajectory, what: str):
    if traj.status == "clearance":
        raise BranchError(f"{what}: orbit entered a turning-point clearance",
                          x=traj.x0, reached=complex(traj.y[-1]), s=traj.t_reach)
    if traj.status in ("underflow", "max_steps"):
        raise FlowError(f"{what}: integration stopped ({traj.status})",
                        x=traj.x0, reached=complex(traj.y[-1]), s=traj.t_reach)


def advance(Q: ComplexPolynomial, x, z, branch_sign=1, *, sqrt_x=None, return_sqrt=False, **kw):
    """``phi(z, x)``: follow the flow from ``x`` for complex time ``z``.

    The straight segment ``0 -> z`` is used in the time plane.

    Raises
    ------
    BranchError
        The orbit enters a turning-point clearance.
    FlowError
        Step-size underflow or step budget exhausted.
    """
    z = complex(z)
    x = complex(x)
    if z == 0:
        sq = _start_sqrt(Q, x, branch_sign, sqrt_x)
        return (x, sq) if return_sqrt else x
    kw.setdefault("eta", 0.05)
    traj = integrate(Q, x, z / abs(z), abs(z), branch_sign, sqrt_x, **kw)
    _require_done(traj, "advance")
    if return_sqrt:
        return complex(traj.y[-1]), complex(traj.sqrt_y[-1])
    return complex(traj.y[-1])


def trace_backward(Q: ComplexPolynomial, x, T_max, branch_sign=1, *, sqrt_x=None, **kw) -> FlowTrajectory:
    """Samples of ``phi(t, x)`` for ``-T_max <= t <= 0``.

    Stopping on ``stop_radius`` (if given) is allowed; any other early stop
    raises.
    """
    traj = integrate(Q, x, -1.0, T_max, branch_sign, sqrt_x, **kw)
    _require_done(traj, "trace_backward")
    return traj


def trace_forward(Q: ComplexPolynomial, x, T_max, branch_sign=1, *, sqrt_x=None, **kw) -> FlowTrajectory:
    """Samples of ``phi(t, x)`` for ``0 <= t <= T_max``."""
    traj = integrate(Q, x, 1.0, T_max, branch_sign, sqrt_x, **kw)
    _require_done(traj, "trace_forward")
    return traj


def action_defect(traj: FlowTrajectory, tol=1e-13) -> np.ndarray:
    """``|S(y_k) - S(x0) - z_k|`` at every sample, by independent quadrature.

    The action difference is integrated with adaptive Gauss-Kronrod along
    the chords between consecutive samples, continuing the branch from
    sample to sample.
    """
    Q = traj.Q
    acc = 0j
    out = np.zeros(len(traj.y))
    for k in range(1, len(traj.y)):
        p0 = traj.y[k - 1]
        dy = traj.y[k] - p0
        ref = traj.sqrt_y[k - 1]
        v, _ = gauss_kronrod(lambda s: aligned_sqrt(Q(p0 + dy * s), ref) * dy, tol=tol)
        acc += v
        out[k] = abs(acc - traj.direction * traj.s[k])
    return out


def group_defect(Q: ComplexPolynomial, x, z1, z2, branch_sign=1, *, sqrt_x=None, **kw) -> float:
    """``|phi(z2, phi(z1, x)) - phi(z1 + z2, x)|``."""
    y1, q1 = advance(Q, x, z1, branch_sign, sqrt_x=sqrt_x, return_sqrt=True, **kw)
    lhs = advance(Q, y1, z2, sqrt_x=q1, **kw)
    rhs = advance(Q, x, complex(z1) + complex(z2), branch_sign, sqrt_x=sqrt_x, **kw)
    return abs(lhs - rhs)


def decay_exponent(traj: FlowTrajectory) -> float:
    """Least-squares slope of ``log|phi|`` against ``log|t|`` on the outer half.

    The outer half is ``t_reach/2 <= |t| <= t_reach``.

    Raises
    ------
    FlowError
        If the orbit has not yet reached ten times the largest turning-point
        modulus there.
    """
    s = traj.s
    T = traj.t_reach
    mask = s >= 0.5 * T
    if mask.sum() < 4:
        # too few adaptive samples on the outer half: use the interpolant
        ss = np.linspace(0.5 * T, T, 32)
        yy = traj.interpolate(ss)
    else:
        ss, yy = s[mask], traj.y[mask]
    R = max([abs(tp.location) for tp in cached_turning_points(traj.Q)] + [1e-300])
    if T <= 0 or np.min(np.abs(yy)) < 10 * R:
        raise FlowError("trajectory too short for a decay fit", t_reach=T,
                        min_modulus=float(np.min(np.abs(yy))) if len(yy) else 0.0)
    slope, _ = np.polyfit(np.log(ss), np.log(np.abs(yy)), 1)
    return float(slope)

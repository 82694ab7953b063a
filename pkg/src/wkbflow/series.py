"""Formal Riccati coefficients, the forcing term C and the envelope Theta.

The formal solution ``S = sum s_n h**n`` of ``h S' + S**2 = Q`` lives in
the ring of rational functions extended by ``w`` with ``w**2 = Q``.  Its
elements are kept exactly, as pairs ``even + odd * w``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NumericalError
from .polynomial import ComplexPolynomial, RationalFunction


class HalfPowerElement:
    """``even + odd * w`` with rational ``even``, ``odd`` and ``w**2 = Q``."""

    __slots__ = ("even", "odd", "Q")

    def __init__(self, Q: ComplexPolynomial, even=0, odd=0):
        self.Q = Q
        self.even = even if isinstance(even, RationalFunction) else RationalFunction(even)
        self.odd = odd if isinstance(odd, RationalFunction) else RationalFunction(odd)

    def _coerce(self, other):
        if isinstance(other, HalfPowerElement):
            return other
        return HalfPowerElement(self.Q, other, 0)

    def __add__(self, other):
        other = self._coerce(other)
        return HalfPowerElement(self.Q, self.even + other.even, self.odd + other.odd)

    __radd__ = __add__

    def __neg__(self):
        return HalfPowerElement(self.Q, -self.even, -self.odd)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        a, b, c, d = self.even, self.odd, other.even, other.odd
        return HalfPowerElement(self.Q, a * c + b * d * self.Q, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        # multiply through by the conjugate c - d w
        norm = other.even * other.even - other.odd * other.odd * self.Q
        conj = HalfPowerElement(self.Q, other.even / norm, -other.odd / norm)
        return self * conj

    def derivative(self) -> "HalfPowerElement":
        # w' = Q' / (2 w) = (Q' / 2Q) w
        dQ = RationalFunction(self.Q.derivative())
        return HalfPowerElement(self.Q, self.even.derivative(),
                                self.odd.derivative() + self.odd * dQ / (2 * RationalFunction(self.Q)))

    def is_zero(self) -> bool:
        return self.even.is_zero() and self.odd.is_zero()

    def __eq__(self, other):
        other = self._coerce(other)
        return self.even == other.even and self.odd == other.odd

    def __call__(self, x, sqrt_x):
        """Evaluate with ``w`` replaced by the branch value ``sqrt_x``."""
        return self.even(x) + self.odd(x) * sqrt_x

    def to_json(self):
        return {"even": self.even.to_json(), "odd": self.odd.to_json()}

    def __str__(self):
        parts = []
        if not self.even.is_zero():
            parts.append(str(self.even))
        if not self.odd.is_zero():
            parts.append(f"[{self.odd}]*sqrt(Q)")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def riccati_coefficients(Q: ComplexPolynomial, sigma: int, N: int) -> list[HalfPowerElement]:
    """Exact ``s_0 .. s_N`` of the formal Riccati solution with ``s_0 = sigma * w``.

    ``s_n = -(sum_{i+j=n, i,j>=1} s_i s_j + s_{n-1}') / (2 s_0)``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    s = [HalfPowerElement(Q, 0, sigma)]
    inv_2s0 = HalfPowerElement(Q, 1) / (2 * s[0])
    for n in range(1, N + 1):
        acc = s[n - 1].derivative()
        for i in range(1, n):
            acc = acc + s[i] * s[n - i]
        s.append(-(acc * inv_2s0))
    return s


def formal_residual_orders(coeffs: list[HalfPowerElement]) -> list[HalfPowerElement]:
    """Coefficients of ``h^0 .. h^N`` in ``h S' + S**2 - Q`` for the truncated series."""
    Q = coeffs[0].Q
    out = [coeffs[0] * coeffs[0] - RationalFunction(Q)]
    for n in range(1, len(coeffs)):
        acc = coeffs[n - 1].derivative()
        for i in range(0, n + 1):
            acc = acc + coeffs[i] * coeffs[n - i]
        out.append(acc)
    return out


@dataclass(frozen=True)
class ForcingTerm:
    """``C = -(s_1' + s_1**2)``, together with ``c = C/Q`` used by the kernels."""

    C: RationalFunction
    Q: ComplexPolynomial

    @property
    def c_over_q(self) -> RationalFunction:
        return self.C / RationalFunction(self.Q)

    @property
    def decay_degree(self) -> int:
        r = self.c_over_q
        return r.denominator.degree - r.numerator.degree


def forcing(Q: ComplexPolynomial) -> ForcingTerm:
    """Build ``C(x)`` by the ``s_1`` route and check it against the closed form.

    Raises
    ------
    NumericalError
        If the two exact constructions differ (cannot happen for valid input).
    """
    s1 = riccati_coefficients(Q, 1, 1)[1]
    via_s1 = -(s1.derivative() + s1 * s1)
    dQ = Q.derivative()
    closed = RationalFunction(-(5 * dQ * dQ - 4 * dQ.derivative() * Q), 16 * Q * Q)
    if not via_s1.odd.is_zero() or via_s1.even != closed:
        raise NumericalError("forcing term routes disagree", via_s1=str(via_s1), closed=str(closed))
    return ForcingTerm(closed, Q)


@dataclass(frozen=True)
class ThetaEnvelope:
    """``Theta(x) = sup_{t<=0} |C/Q|(phi(t, x))`` on a sampled backward orbit.

    ``value`` is the larger of the sampled supremum and the tail bound
    ``M_K / (1 + T)**2`` for the unsampled part ``t < -T``.
    """

    x: complex
    value: float
    t_argmax: float
    sample_sup: float
    tail_bound: float
    M_K: float


def c_samples(force: ForcingTerm, y) -> np.ndarray:
    return force.c_over_q(np.asarray(y, dtype=complex))


def theta(domain, x, traj, force: ForcingTerm | None = None, refine: int = 3) -> ThetaEnvelope:
    """Envelope ``Theta(x)`` from a backward trajectory started at ``x``.

    Parameters
    ----------
    domain : StokesDomain or None
        Only used for bookkeeping; the orbit already encodes the domain.
    traj : FlowTrajectory
        Backward orbit from ``x``.
    refine : int
        Interior Hermite points per panel added to the sample supremum.
    """
    if force is None:
        force = forcing(traj.Q)
    s = traj.s
    if len(s) < 2:
        raise NumericalError("trajectory has fewer than two samples", x=complex(x))
    c = np.abs(c_samples(force, traj.y))
    frac = np.arange(1, refine + 1) / (refine + 1)
    sm = (s[:-1, None] + (s[1:] - s[:-1])[:, None] * frac[None, :]).ravel()
    cm = np.abs(c_samples(force, traj.interpolate(sm)))
    allc = np.concatenate([c, cm])
    alls = np.concatenate([s, sm])
    k = int(np.argmax(allc))
    sup = float(allc[k])
    t_arg = float(alls[k])
    # polish an interior maximum on the interpolant; sampling alone
    # underestimates the supremum
    j = int(np.clip(np.searchsorted(s, t_arg), 1, len(s) - 1))
    lo, hi = s[max(j - 2, 0)], s[min(j + 1, len(s) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda u: -abs(c_samples(force, traj.interpolate(u))),
                              bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
        if -res.fun > sup:
            sup, t_arg = float(-res.fun), float(res.x)
    M_K = float(np.max(allc * (1.0 + alls) ** 2))
    tail = M_K / (1.0 + s[-1]) ** 2
    return ThetaEnvelope(complex(x), max(sup, tail), -t_arg, sup, tail, M_K)

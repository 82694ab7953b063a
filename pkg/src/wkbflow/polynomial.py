"""Exact complex polynomials, rational functions and turning points.

Coefficients are Gaussian rationals: every double-precision input is
converted exactly, so derivatives, products and gcd reductions carry no
rounding error.  Numerical evaluation converts to ``complex`` once.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number

import numpy as np

from . import kernels
from .errors import ConfigError, RootFindingError


class GaussianRational:
    """``re + i*im`` with ``Fraction`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def of(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value, 0)
        if isinstance(value, (float, np.floating)):
            return cls(Fraction(float(value)), 0)
        if isinstance(value, (complex, np.complexfloating)):
            value = complex(value)
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, np.integer):
            return cls(int(value), 0)
        if isinstance(value, Number):
            value = complex(value)
            return cls(Fraction(value.real), Fraction(value.imag))
        raise TypeError(f"cannot convert {value!r} to a Gaussian rational")

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianRational.of(other) - self

    def __mul__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re * other.re - self.im * other.im,
                                self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.of(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussianRational((self.re * other.re + self.im * other.im) / den,
                                (self.im * other.re - self.re * other.im) / den)

    def __rtruediv__(self, other):
        return GaussianRational.of(other) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __eq__(self, other):
        try:
            other = GaussianRational.of(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


_ZERO = GaussianRational(0, 0)
_ONE = GaussianRational(1, 0)


def _trim(c):
    c = list(c)
    while c and not c[-1]:
        c.pop()
    return tuple(c)


def _padd(p, q):
    n = max(len(p), len(q))
    return _trim((p[i] if i < len(p) else _ZERO) + (q[i] if i < len(q) else _ZERO)
                 for i in range(n))


def _pneg(p):
    return tuple(-c for c in p)


def _pmul(p, q):
    if not p or not q:
        return ()
    out = [_ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if not a:
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return _trim(out)


def _pscale(p, s):
    return _trim(c * s for c in p)


def _pdivmod(p, q):
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    lead_inv = _ONE / q[-1]
    out = [_ZERO] * max(len(p) - len(q) + 1, 0)
    for k in range(len(p) - len(q), -1, -1):
        coef = r[k + len(q) - 1] * lead_inv
        out[k] = coef
        if coef:
            for j, b in enumerate(q):
                r[k + j] = r[k + j] - coef * b
    return _trim(out), _trim(r[: max(len(q) - 1, 0)])


def _pmonic(p):
    return _pscale(p, _ONE / p[-1]) if p else p


def _pgcd(p, q):
    p, q = _trim(p), _trim(q)
    while q:
        p, q = q, _pdivmod(p, q)[1]
    return _pmonic(p)


def _pderiv(p):
    return _trim(p[k] * k for k in range(1, len(p)))


class ComplexPolynomial:
    """Polynomial with exact Gaussian-rational coefficients, ascending degree.

    The zero polynomial has no coefficients and degree ``-1``.
    """

    __slots__ = ("exact", "_numeric")

    def __init__(self, coefficients=()):
        self.exact = _trim(GaussianRational.of(c) for c in coefficients)
        self._numeric = None

    @classmethod
    def _from_exact(cls, exact):
        obj = cls.__new__(cls)
        obj.exact = _trim(exact)
        obj._numeric = None
        return obj

    @classmethod
    def from_roots(cls, roots, leading=1):
        p = (GaussianRational.of(leading),)
        for r in roots:
            p = _pmul(p, (-GaussianRational.of(r), _ONE))
        return cls._from_exact(p)

    @classmethod
    def from_json(cls, data):
        try:
            coeffs = [complex(float(re), float(im)) for re, im in data]
        except (TypeError, ValueError) as exc:
            raise ConfigError("polynomial must be a list of [re, im] pairs", value=str(data)) from exc
        return cls(coeffs)

    def to_json(self):
        return [[c.real, c.imag] for c in self.coefficients]

    @property
    def degree(self) -> int:
        return len(self.exact) - 1

    @property
    def coefficients(self) -> np.ndarray:
        if self._numeric is None:
            self._numeric = np.array([complex(c) for c in self.exact], dtype=complex)
        return self._numeric

    @property
    def leading(self) -> complex:
        return complex(self.exact[-1]) if self.exact else 0j

    def is_zero(self) -> bool:
        return not self.exact

    def __call__(self, x):
        if not self.exact:
            return np.zeros_like(np.asarray(x, dtype=complex)) if np.ndim(x) else 0j
        if np.ndim(x) == 0:
            acc = 0j
            x = complex(x)
            for c in self.coefficients[::-1]:
                acc = acc * x + c
            return acc
        return kernels.horner(self.coefficients, np.asarray(x, dtype=complex))

    def derivative(self) -> "ComplexPolynomial":
        return ComplexPolynomial._from_exact(_pderiv(self.exact))

    def taylor_at(self, a, order):
        """Numeric Taylor coefficients ``Q^(k)(a)/k!`` for ``k <= order``."""
        out = []
        p = self
        fact = 1.0
        for k in range(order + 1):
            if k:
                fact *= k
            out.append(p(a) / fact)
            p = p.derivative()
        return out

    def __add__(self, other):
        other = _as_poly(other)
        return ComplexPolynomial._from_exact(_padd(self.exact, other.exact))

    __radd__ = __add__

    def __neg__(self):
        return ComplexPolynomial._from_exact(_pneg(self.exact))

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return ComplexPolynomial._from_exact(_pmul(self.exact, other.exact))

    __rmul__ = __mul__

    def __divmod__(self, other):
        q, r = _pdivmod(self.exact, _as_poly(other).exact)
        return ComplexPolynomial._from_exact(q), ComplexPolynomial._from_exact(r)

    def gcd(self, other) -> "ComplexPolynomial":
        return ComplexPolynomial._from_exact(_pgcd(self.exact, _as_poly(other).exact))

    def monic(self) -> "ComplexPolynomial":
        return ComplexPolynomial._from_exact(_pmonic(self.exact))

    def __eq__(self, other):
        try:
            other = _as_poly(other)
        except TypeError:
            return NotImplemented
        return self.exact == other.exact

    def __hash__(self):
        return hash(self.exact)

    def __repr__(self):
        return f"ComplexPolynomial({[complex(c) for c in self.exact]})"

    def __str__(self):
        if not self.exact:
            return "0"
        terms = []
        for k, c in enumerate(self.exact):
            if not c:
                continue
            mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            if mono and c == _ONE:
                terms.append(mono)
            elif mono and c == -_ONE:
                terms.append("-" + mono)
            else:
                terms.append(str(c) + ("*" + mono if mono else ""))
        return " + ".join(terms).replace("+ -", "- ")


def _as_poly(value) -> ComplexPolynomial:
    if isinstance(value, ComplexPolynomial):
        return value
    return ComplexPolynomial([value])


class RationalFunction:
    """``numerator / denominator`` kept reduced with a monic denominator."""

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator, denominator=None):
        num = _as_poly(numerator)
        den = ComplexPolynomial([1]) if denominator is None else _as_poly(denominator)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        self.numerator, self.denominator = _reduce(num, den)

    @classmethod
    def _raw(cls, num, den):
        obj = cls.__new__(cls)
        obj.numerator = num
        obj.denominator = den
        return obj

    def reduce(self) -> "RationalFunction":
        return RationalFunction(self.numerator, self.denominator)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def __call__(self, x):
        return self.numerator(x) / self.denominator(x)

    def __add__(self, other):
        other = _as_rational(other)
        g = self.denominator.gcd(other.denominator)
        a, _ = divmod(self.denominator, g)
        b, _ = divmod(other.denominator, g)
        return RationalFunction(self.numerator * b + other.numerator * a, a * other.denominator)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction._raw(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-_as_rational(other))

    def __rsub__(self, other):
        return _as_rational(other) - self

    def __mul__(self, other):
        other = _as_rational(other)
        return RationalFunction(self.numerator * other.numerator,
                                self.denominator * other.denominator)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.numerator * other.denominator,
                                self.denominator * other.numerator)

    def __rtruediv__(self, other):
        return _as_rational(other) / self

    def derivative(self) -> "RationalFunction":
        n, d = self.numerator, self.denominator
        return RationalFunction(n.derivative() * d - n * d.derivative(), d * d)

    def __eq__(self, other):
        try:
            other = _as_rational(other)
        except TypeError:
            return NotImplemented
        return self.numerator == other.numerator and self.denominator == other.denominator

    def __hash__(self):
        return hash((self.numerator, self.denominator))

    def to_json(self):
        return {"numerator": self.numerator.to_json(), "denominator": self.denominator.to_json()}

    def __repr__(self):
        return f"RationalFunction({self.numerator!r}, {self.denominator!r})"

    def __str__(self):
        if self.denominator.degree == 0 and self.denominator.exact[0] == _ONE:
            return str(self.numerator)
        return f"({self.numerator}) / ({self.denominator})"


def _as_rational(value) -> RationalFunction:
    if isinstance(value, RationalFunction):
        return value
    return RationalFunction._raw(_as_poly(value), ComplexPolynomial([1]))


def _reduce(num: ComplexPolynomial, den: ComplexPolynomial):
    if num.is_zero():
        return num, ComplexPolynomial([1])
    g = num.gcd(den)
    if g.degree > 0:
        num, _ = divmod(num, g)
        den, _ = divmod(den, g)
    lead = den.exact[-1]
    if lead != _ONE:
        inv = _ONE / lead
        num = ComplexPolynomial._from_exact(_pscale(num.exact, inv))
        den = ComplexPolynomial._from_exact(_pscale(den.exact, inv))
    return num, den


@dataclass(frozen=True)
class TurningPoint:
    location: complex
    multiplicity: int = 1

    def to_json(self):
        return {"loc": [self.location.real, self.location.imag], "mult": self.multiplicity}


def cauchy_bound(Q: ComplexPolynomial) -> float:
    c = Q.coefficients
    return 1.0 + float(np.max(np.abs(c[:-1] / c[-1]))) if Q.degree > 0 else 1.0


def find_turning_points(Q: ComplexPolynomial, tol: float = 1e-12, cluster_radius: float | None = None,
                        max_iter: int = 500) -> list[TurningPoint]:
    """Zeros of ``Q`` with multiplicities.

    Aberth-Ehrlich simultaneous iteration seeded on the Cauchy-bound
    circle, followed by Newton polishing.  Approximations closer than
    ``cluster_radius`` (default ``1e-6`` times the Cauchy bound) are merged
    into one multiple root, whose location is refined as a simple zero of
    the ``(r-1)``-th derivative.
    """
    m = Q.degree
    if m < 1:
        raise ConfigError("Q must have degree at least 1", degree=m)
    bound = cauchy_bound(Q)
    if cluster_radius is None:
        cluster_radius = 1e-6 * bound
    dQ = Q.derivative()
    z = bound * np.exp(1j * (2 * np.pi * np.arange(m) / m + 0.4))
    converged = False
    for _ in range(max_iter):
        p = Q(z)
        dp = dQ(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(dp != 0, p / dp, 0.0)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            corr = w / (1.0 - w * inv.sum(axis=1))
        corr = np.where(np.isfinite(corr), corr, 0.0)
        z = z - corr
        if np.all(np.abs(corr) <= 4 * np.finfo(float).eps * np.maximum(np.abs(z), 1.0)):
            converged = True
            break
    if not converged:
        # clustered (multiple) roots converge only linearly; accept if residuals are small
        if not np.all(np.abs(Q(z)) <= np.sqrt(tol) * _eval_scale(Q, z)):
            raise RootFindingError("Aberth iteration did not converge", partial=[complex(v) for v in z])

    # clustering by single linkage
    labels = list(range(m))
    for i in range(m):
        for j in range(i + 1, m):
            if abs(z[i] - z[j]) <= cluster_radius:
                old, new = labels[j], labels[i]
                labels = [new if lab == old else lab for lab in labels]
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(z[i])

    out = []
    for members in groups.values():
        r = len(members)
        loc = complex(np.mean(members))
        target = Q
        for _ in range(r - 1):
            target = target.derivative()
        dtarget = target.derivative()
        for _ in range(8):
            d = dtarget(loc)
            if d == 0:
                break
            step = target(loc) / d
            loc -= step
            # relative test: roots near the origin must still be resolved
            if abs(step) <= 4 * np.finfo(float).eps * abs(loc) or step == 0:
                break
        if abs(Q(loc)) > max(tol, np.finfo(float).eps) * 1e3 * _eval_scale(Q, loc) and r == 1:
            raise RootFindingError("root polishing failed", partial=[complex(v) for v in z])
        # snap parts that are pure rounding noise so real roots come out real
        eps = 8 * np.finfo(float).eps * bound
        loc = complex(0.0 if abs(loc.real) < eps else loc.real, 0.0 if abs(loc.imag) < eps else loc.imag)
        out.append(TurningPoint(loc, r))
    out.sort(key=lambda tp: (round(tp.location.real, 12), round(tp.location.imag, 12)))
    return out


@functools.lru_cache(maxsize=128)
def cached_turning_points(Q: ComplexPolynomial) -> tuple:
    """Memoised :func:`find_turning_points` with default settings."""
    return tuple(find_turning_points(Q))


def _eval_scale(Q: ComplexPolynomial, x):
    c = np.abs(Q.coefficients)
    ax = np.abs(np.asarray(x))
    acc = np.zeros_like(ax, dtype=float)
    for ck in c[::-1]:
        acc = acc * ax + ck
    return acc


def geometry_scale(points) -> float:
    """Length scale of the turning-point configuration (at least 1)."""
    locs = [tp.location if isinstance(tp, TurningPoint) else complex(tp) for tp in points]
    return max([1.0] + [abs(v) for v in locs])

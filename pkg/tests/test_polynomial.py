import cmath
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wkbflow.errors import ConfigError
from wkbflow.polynomial import (ComplexPolynomial, GaussianRational, RationalFunction, TurningPoint,
                                cauchy_bound, find_turning_points)

X = sp.Symbol("x")

small_ints = st.integers(min_value=-5, max_value=5)
gauss = st.builds(complex, small_ints, small_ints)
polys = st.lists(gauss, min_size=1, max_size=5).map(ComplexPolynomial)


def to_sympy(P):
    return sum(sp.Rational(c.re) * X ** k + sp.I * sp.Rational(c.im) * X ** k
               for k, c in enumerate(P.exact))


def test_gaussian_rational_arithmetic_is_exact():
    a = GaussianRational(Fraction(1, 3), 2)
    b = GaussianRational(-1, Fraction(1, 7))
    p = a * b
    assert p.re == Fraction(-1, 3) - Fraction(2, 7)
    assert p.im == Fraction(1, 21) - 2
    q = p / b
    assert q.re == a.re and q.im == a.im


def test_from_roots_and_evaluation():
    Q = ComplexPolynomial.from_roots([1, -1], leading=-1)
    np.testing.assert_allclose(Q.coefficients, [1, 0, -1])
    assert Q(2.0) == -3
    np.testing.assert_allclose(Q(np.array([0.0, 1j])), [1.0, 2.0])


def test_derivative_and_taylor_match_sympy():
    Q = ComplexPolynomial([1, 2j, -3, 0.5])
    ref = sp.expand(sp.diff(to_sympy(Q), X))
    assert sp.expand(to_sympy(Q.derivative()) - ref) == 0
    tay = Q.taylor_at(1 + 1j, 3)
    for k, c in enumerate(tay):
        want = complex(sp.diff(to_sympy(Q), X, k).subs(X, 1 + sp.I) / sp.factorial(k))
        assert abs(complex(c) - want) < 1e-12


@settings(max_examples=40, deadline=None)
@given(polys, polys)
def test_ring_operations_agree_with_sympy(P, R):
    assert sp.expand(to_sympy(P * R) - to_sympy(P) * to_sympy(R)) == 0
    assert sp.expand(to_sympy(P + R) - to_sympy(P) - to_sympy(R)) == 0


@settings(max_examples=40, deadline=None)
@given(polys, polys)
def test_divmod_reconstructs(P, R):
    if R.is_zero():
        return
    q, r = divmod(P, R)
    assert (q * R + r) == P
    assert r.is_zero() or r.degree < R.degree


def test_gcd_matches_sympy():
    A = ComplexPolynomial.from_roots([1, 2, 1j])
    B = ComplexPolynomial.from_roots([2, 1j, -3])
    g = A.gcd(B).monic()
    ref = sp.Poly(sp.gcd(to_sympy(A), to_sympy(B)), X).monic()
    assert sp.expand(to_sympy(g) - ref.as_expr()) == 0


def test_rational_function_reduces_and_differentiates():
    num = ComplexPolynomial.from_roots([1, 2])
    den = ComplexPolynomial.from_roots([1, -1])
    f = RationalFunction(num, den)
    assert f.denominator.degree == 1
    assert f(3.0) == pytest.approx(1 / 4)
    df = f.derivative()
    h = 1e-6
    assert complex(df(0.5)) == pytest.approx((f(0.5 + h) - f(0.5 - h)) / (2 * h), rel=1e-8)


def test_json_roundtrip():
    Q = ComplexPolynomial([1, 0, -1j])
    assert ComplexPolynomial.from_json(Q.to_json()) == Q
    with pytest.raises(ConfigError):
        ComplexPolynomial.from_json([[1, 2, 3]])


def test_turning_points_of_well_are_plus_minus_one():
    tps = find_turning_points(ComplexPolynomial([1, 0, -1]))
    assert [t.location for t in tps] == [-1 + 0j, 1 + 0j]
    assert all(t.multiplicity == 1 for t in tps)
    assert all(isinstance(t.location, complex) for t in tps)


def test_multiple_root_is_clustered():
    Q = ComplexPolynomial.from_roots([0.5j, 0.5j, 0.5j, -2])
    tps = find_turning_points(Q)
    assert sorted(t.multiplicity for t in tps) == [1, 3]
    triple = next(t for t in tps if t.multiplicity == 3)
    assert abs(triple.location - 0.5j) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6))
def test_roots_match_numpy_oracle(roots):
    # keep roots separated so that clustering does not merge them
    roots = np.array(roots)
    if len(roots) > 1 and np.min(np.abs(roots[:, None] - roots[None, :]) + 10 * np.eye(len(roots))) < 0.05:
        return
    Q = ComplexPolynomial.from_roots(roots)
    found = np.array([t.location for t in find_turning_points(Q)])
    ref = np.roots(Q.coefficients[::-1])
    assert len(found) == len(ref)
    for r in ref:
        assert np.min(np.abs(found - r)) < 1e-8 * max(1.0, abs(r))


def test_cauchy_bound_encloses_roots():
    Q = ComplexPolynomial([3, -1j, 2, 1])
    R = cauchy_bound(Q)
    assert all(abs(t.location) <= R for t in find_turning_points(Q))


def test_constant_has_no_turning_points():
    with pytest.raises(ConfigError):
        find_turning_points(ComplexPolynomial([2.0]))


def test_turning_point_json():
    tp = TurningPoint(complex(0, 1), 2)
    assert tp.to_json() == {"loc": [0.0, 1.0], "mult": 2}
    assert cmath.isclose(tp.location, 1j)


def test_evaluation_examples():
    assert ComplexPolynomial([1, 0, -1])(1.0) == 0
    assert ComplexPolynomial([0, 1])(2 + 1j) == 2 + 1j
    cubic = ComplexPolynomial.from_roots([0, -1, -1j])
    assert abs(cubic(-1j)) == 0


def test_derivative_examples():
    assert ComplexPolynomial([1, 0, -1]).derivative() == ComplexPolynomial([0, -2])
    assert ComplexPolynomial([0, 1]).derivative() == ComplexPolynomial([1])
    assert ComplexPolynomial([0, 1j, 0, 1]).derivative() == ComplexPolynomial([1j, 0, 3])


def test_derivative_is_linear_exactly():
    p = ComplexPolynomial([1, 2j, 3, -1])
    q = ComplexPolynomial([0, -1, 1j])
    a, b = 2 - 1j, Fraction(1, 3)
    lhs = (a * p + b * q).derivative()
    assert lhs == a * p.derivative() + b * q.derivative()


def test_turning_point_examples():
    assert find_turning_points(ComplexPolynomial([0, 1])) == [TurningPoint(0j, 1)]
    assert find_turning_points(ComplexPolynomial([0, 0, 1])) == [TurningPoint(0j, 2)]


def test_rational_examples():
    x = ComplexPolynomial([0, 1])
    inv = RationalFunction(1, x)
    assert inv * inv == RationalFunction(1, x * x)
    s1 = RationalFunction(-1, 4 * x)
    assert s1.derivative() == RationalFunction(1, 4 * x * x)
    assert s1 * s1 + RationalFunction(1, 4 * x * x) == RationalFunction(5, 16 * x * x)


def test_division_by_zero_rational():
    with pytest.raises(ZeroDivisionError):
        RationalFunction(1, ComplexPolynomial([1, 1])) / RationalFunction(0)


def test_reduction_is_idempotent():
    f = RationalFunction(ComplexPolynomial.from_roots([1, 2, 3]), ComplexPolynomial.from_roots([3, 1j]))
    assert f.reduce() == f.reduce().reduce()
    assert f.reduce().denominator.degree == 1


def test_random_polynomials_reconstruct_from_roots():
    rng = np.random.default_rng(3)
    for _ in range(25):
        m = int(rng.integers(1, 7))
        c = rng.uniform(-10, 10, m + 1) + 1j * rng.uniform(-10, 10, m + 1)
        Q = ComplexPolynomial(list(c))
        tps = find_turning_points(Q)
        roots = [t.location for t in tps for _ in range(t.multiplicity)]
        rebuilt = Q.leading * np.poly(roots)[::-1]
        np.testing.assert_allclose(rebuilt, Q.coefficients, rtol=1e-8, atol=1e-8 * np.max(np.abs(c)))

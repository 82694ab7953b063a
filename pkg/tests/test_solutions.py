import cmath

import numpy as np
import pytest
from conftest import Q_AIRY, Q_BARRIER, Q_WELL, domain_with_anchor, geometry
from scipy.special import airy

from wkbflow.errors import ConfigError, GateError, RegionError
from wkbflow.polynomial import ComplexPolynomial
from wkbflow.solutions import (OrbitCache, asymptotic_match, build_extension, build_solution,
                               continuity_defect, direct_ode_check, exact_coefficients,
                               extend_adjoining, g_ladder, relative_spread, remainder_slope, residual,
                               stable_arc_end, tail_certificate, wronskian)
from wkbflow.stokes import RegionParams, sample_domain

MID = RegionParams(0.3, 0.5)


def airy_scaled(x, h):
    return 2 * np.sqrt(np.pi) * h ** (-1 / 6) * airy(h ** (-2 / 3) * x)[0]


@pytest.mark.parametrize("upper", [True, False])
def test_recessive_solution_is_airy(upper, rng):
    # U is Ai up to a fourth root of unity in the domains above and below
    # the positive real axis; the recessive sign is -1 above, +1 below
    geo = geometry(Q_AIRY)
    d = domain_with_anchor(geo, lambda a: a.real > 0 and (a.imag > 0) == upper)
    sign = -1 if upper else 1
    h = 0.2
    pts = sample_domain(d, 5, rng, MID)
    sol = build_solution(d, sign, h, pts)
    ratios = np.array([sol(x) / airy_scaled(x, h) for x in pts])
    assert relative_spread(ratios) < 1e-7
    assert abs(ratios[0] ** 4 - 1) < 1e-7


@pytest.mark.parametrize("coeffs", [Q_AIRY, Q_WELL, Q_BARRIER])
def test_residual_routes(coeffs, rng):
    geo = geometry(coeffs)
    for d in geo.domains:
        x = sample_domain(d, 1, rng, MID)[0]
        for sign in (1, -1):
            sol = build_solution(d, sign, 0.1, [x], MID)
            r = residual(sol, x)
            assert r.finite_difference < 1e-5
            assert r.riccati < 1e-5
            assert r.agree()


def test_residual_rejects_other_h(rng):
    d = geometry(Q_AIRY).domains[0]
    x = sample_domain(d, 1, rng, MID)[0]
    with pytest.raises(ConfigError):
        residual(build_solution(d, 1, 0.1, [x]), x, h=0.2)


def test_wronskian_is_constant(rng):
    for coeffs in (Q_AIRY, Q_BARRIER):
        for d in geometry(coeffs).domains:
            pts = sample_domain(d, 5, rng, MID)
            orbits = OrbitCache(h_max=0.1)
            up = build_solution(d, 1, 0.1, pts, MID, orbits=orbits)
            um = build_solution(d, -1, 0.1, pts, MID, orbits=orbits)
            assert relative_spread(wronskian(up, um, pts)) < 1e-6


def test_airy_wronskian_value():
    # U_pm ~ exp(+-S/h) / Q^(1/4) at infinity, so the constant Wronskian
    # equals its far-field value -2/h
    d = domain_with_anchor(geometry(Q_AIRY), lambda a: a.real > 0 and a.imag < 0)
    x = d.anchor
    up = build_solution(d, 1, 0.1, [x])
    um = build_solution(d, -1, 0.1, [x])
    W = wronskian(up, um, [x])[0]
    assert abs(W + 2 / 0.1) < 1e-8 * 20


def test_direct_integration_agrees(rng):
    d = geometry(Q_BARRIER).domains[0]
    for x in sample_domain(d, 2, rng, MID):
        for sign in (1, -1):
            sol = build_solution(d, sign, 0.1, [x], MID)
            assert direct_ode_check(sol, x, stable_arc_end(sol, x, 0.2)) < 1e-6


def test_points_outside_the_region_are_rejected():
    d = geometry(Q_AIRY).domains[0]
    other = geometry(Q_AIRY).domains[1]
    with pytest.raises(RegionError):
        build_solution(d, 1, 0.1, [other.anchor])
    with pytest.raises(RegionError):
        build_solution(d, 1, 0.1, [0.01 + 0j])


def test_gate_is_enforced():
    d = geometry(Q_AIRY).domains[0]
    x = d.anchor / abs(d.anchor) * 0.6
    with pytest.raises(GateError):
        build_solution(d, 1, 1.5, [x], RegionParams(0.01, 0.1))


def test_tail_certificate_is_finite(rng):
    d = geometry(Q_WELL).domains[0]
    x = sample_domain(d, 1, rng, MID)[0]
    st = build_solution(d, 1, 0.1, [x]).data(x).state
    assert np.isfinite(tail_certificate(st))


def test_asymptotic_coefficients():
    d = domain_with_anchor(geometry(Q_AIRY), lambda a: a.real < 0)
    x = d.anchor
    hs = 0.05 * 0.75 ** np.arange(8)
    g = g_ladder(d, x, hs)
    rows = asymptotic_match(d, x, hs, N=2, g_values=g)
    assert rows[0].rel_error < 1e-5
    assert rows[1].rel_error < 1e-2
    ex = exact_coefficients(d.Q, x, d.field.point(x).sqrt, 2)
    assert abs(remainder_slope(g, hs, ex, 2) - 3) < 0.1
    with pytest.raises(ConfigError):
        asymptotic_match(d, x, hs[:4], N=2, g_values=g[:4])


def test_exact_coefficients_for_airy():
    # a_1 = s_2 / sqrt(Q) = -5 / (32 x^3)
    x = 1.3 - 0.4j
    a1 = exact_coefficients(ComplexPolynomial([0, 1]), x, cmath.sqrt(x), 1)[0]
    assert abs(a1 + 5 / (32 * x ** 3)) < 1e-14


def test_extension_across_a_curve():
    geo = geometry(Q_WELL)
    c = next(c for c in geo.curves if c.terminus is None)
    region = None
    for d in geo.domains:
        try:
            region = build_extension(geo, c.curve_id, d.label)
            break
        except RegionError:
            continue
    assert region is not None
    assert region.side in (1, -1)
    k = len(c.polyline) // 2
    p = c.polyline[k]
    tangent = c.polyline[k + 1] - c.polyline[k - 1]
    normal = 1j * tangent / abs(tangent)
    sol, vals = extend_adjoining(region, 0.1, [p + 0.2 * normal, p - 0.2 * normal])
    assert np.all(np.isfinite(vals))
    assert continuity_defect(sol, p, normal) < 1e-5

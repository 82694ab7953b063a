"""Acceptance criteria, one test per criterion at the stated tolerances.

Every test prints a single ``PASS`` or ``FAIL`` line with the measured
value; the lines are repeated in the terminal summary.
"""
import time

import numpy as np
import pytest

from conftest import (ACCEPTANCE_LINES, Q_AIRY, Q_BARRIER, Q_CUBIC, Q_WELL, geometry, poly)
from wkbflow.flow import action_defect, decay_exponent, group_defect, integrate
from wkbflow.polynomial import cached_turning_points
from wkbflow.series import forcing
from wkbflow.solver import build_grid, catalan, iterate, verify_kernel_ode
from wkbflow.solutions import (OrbitCache, asymptotic_match, build_extension, build_solution,
                               direct_ode_check, extend_adjoining, g_ladder, relative_spread,
                               remainder_slope, residual, stable_arc_end, wronskian)
from wkbflow.stokes import RegionParams, conformal_roundtrip, sample_domain

MID = RegionParams(delta=0.3, epsilon=0.5)


def report(label, ok, measured):
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {measured}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def spread_points(geo, n, rng, params=MID):
    """``n`` points spread round-robin over the supported domains."""
    doms = [d for d in geo.domains if d.kind != "unsupported"]
    counts = [n // len(doms) + (1 if k < n % len(doms) else 0) for k in range(len(doms))]
    out = []
    for d, c in zip(doms, counts):
        if c:
            out += [(complex(x), d) for x in sample_domain(d, c, rng, params)]
    return out


def test_criterion_01_flow_identity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_action = worst_group = 0.0
    for coeffs in (Q_AIRY, Q_WELL, Q_CUBIC):
        Q = poly(coeffs)
        for x, d in spread_points(geometry(coeffs), 50, rng, RegionParams(0.05, 0.05)):
            sq = d.field.point(x).sqrt
            for direction in (-1.0, 1.0):
                traj = integrate(Q, x, direction, 50.0, sqrt_x=sq)
                assert traj.status == "done"
                worst_action = max(worst_action, float(np.max(action_defect(traj))))
            worst_group = max(worst_group, group_defect(Q, x, -30.0, 20.0, sqrt_x=sq),
                              group_defect(Q, x, 25.0, -50.0, sqrt_x=sq))
    elapsed = time.perf_counter() - t0
    ok = worst_action <= 1e-8 and worst_group <= 1e-7 and elapsed <= 30.0
    report("1 flow identity", ok,
           f"action {worst_action:.2e} (<=1e-8), group {worst_group:.2e} (<=1e-7), {elapsed:.1f}s (<=30s)")
    assert ok


def test_criterion_02_stokes_curves():
    geo = geometry(Q_AIRY)
    angles = sorted(c.asymptotic_angle() for c in geo.curves)
    want = [0.0, 2 * np.pi / 3, 4 * np.pi / 3]
    dev = max(min(abs(a - w), 2 * np.pi - abs(a - w)) for a, w in zip(angles, want))
    well = geometry(Q_WELL)
    tps = set(t.location for t in cached_turning_points(poly(Q_WELL)))
    linked = [c for c in well.curves if c.terminus is not None and c.terminus.location in tps - {c.source.location}]
    ok = len(geo.curves) == 3 and dev <= 0.01 and len(linked) > 0
    report("2 Stokes geometry (curves)", ok,
           f"{len(geo.curves)} curves for Q=x, angle error {dev:.2e} rad (<=0.01), "
           f"{len(linked)} curves of 1-x^2 ending at the other turning point")
    assert ok


@pytest.mark.xfail(strict=True, reason="Q = 1 - x^2 has no type-2 domain: the turning points are joined by a "
                                       "Stokes curve, since the action between them is real")
def test_criterion_02_type2_domain_for_well():
    geo = geometry(Q_WELL)
    closed = np.pi / 2      # |int_{-1}^{1} sqrt(1 - x^2) dx|
    type2 = [d for d in geo.domains if d.kind == "type2"]
    err = min((abs(d.mu - closed) / closed for d in type2), default=np.inf)
    ok = err <= 0.01
    report("2 Stokes geometry (type-2 mu for 1-x^2)", ok,
           f"{len(type2)} type-2 domains, mu relative error {err:.2e} (<=1e-2)")
    assert ok


def test_criterion_03_catalan_bounds(rng):
    exact = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786]
    M = catalan(12)
    Q = poly(Q_AIRY)
    force = forcing(Q)
    worst = 0.0
    checked = 0
    for x, d in spread_points(geometry(Q_AIRY), 20, rng):
        sq = d.field.point(x).sqrt
        grid = build_grid(Q, x, sq, 0.2, force=force)
        for h in (0.2, 0.1, 0.05):
            st = iterate(grid, h)
            ratio = np.asarray(st.values) / np.asarray(st.bounds)
            worst = max(worst, float(np.max(ratio)))
            checked += len(ratio)
    ok = M == exact and worst <= 1.0 + 1e-9
    report("3 Catalan bounds", ok, f"M_1..M_12 exact: {M == exact}; max |G_n(0)|/bound {worst:.3f} "
                                   f"over {checked} orders")
    assert ok


def test_criterion_04_kernel_ode_identity(rng):
    Q = poly(Q_AIRY)
    C = forcing(Q).C
    worst = 0.0
    for x, d in spread_points(geometry(Q_AIRY), 10, rng):
        sq = d.field.point(x).sqrt
        worst = max(worst, verify_kernel_ode(Q, x, sq, C, 0.1).relative)
    ok = worst <= 1e-5
    report("4 kernel ODE identity", ok, f"max relative residual {worst:.2e} (<=1e-5)")
    assert ok


def _solution_sweep(coeffs, rng):
    Q = poly(coeffs)
    geo = geometry(coeffs)
    pts = spread_points(geo, 10, rng)
    wdom = geo.domains[0]
    wpts = sample_domain(wdom, 10, rng, MID)
    res = ode = spread = 0.0
    agree = True
    for h in (0.2, 0.1, 0.05):
        orbits = OrbitCache(h_max=h)
        for x, d in pts:
            sp = build_solution(d, 1, h, [x], orbits=orbits)
            sm = build_solution(d, -1, h, [x], orbits=orbits)
            for sol in (sp, sm):
                r = residual(sol, x)
                res = max(res, r.finite_difference, r.riccati)
                agree &= r.agree()
        # the Wronskian is constant for the pair belonging to one domain
        sp = build_solution(wdom, 1, h, orbits=orbits)
        sm = build_solution(wdom, -1, h, orbits=orbits)
        spread = max(spread, relative_spread(wronskian(sp, sm, wpts)))
        x0, d0 = pts[0]
        for sign in (1, -1):
            sol = build_solution(d0, sign, h, orbits=orbits)
            ode = max(ode, direct_ode_check(sol, x0, stable_arc_end(sol, x0, 0.2)))
    return res, agree, ode, spread, Q


@pytest.fixture(scope="module")
def sweeps():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    out = {c: _solution_sweep(c, rng) for c in (Q_AIRY, Q_WELL)}
    return out, time.perf_counter() - t0


def test_criterion_05_solution_residual(sweeps):
    out, elapsed = sweeps
    res = max(v[0] for v in out.values())
    agree = all(v[1] for v in out.values())
    ode = max(v[2] for v in out.values())
    ok = res <= 1e-5 and ode <= 1e-4 and agree and elapsed <= 120.0
    report("5 solution residual", ok,
           f"residual {res:.2e} (<=1e-5), routes agree {agree}, direct ODE {ode:.2e} (<=1e-4), "
           f"{elapsed:.1f}s (<=120s)")
    assert ok


def test_criterion_06_wronskian(sweeps):
    out, _ = sweeps
    spread = max(v[3] for v in out.values())
    ok = spread <= 1e-6
    report("6 Wronskian constancy", ok, f"max relative spread {spread:.2e} over 10 points per (Q, h) (<=1e-6)")
    assert ok


def test_criterion_07_asymptotics(rng):
    geo = geometry(Q_AIRY)
    hs = 0.05 * 0.75 ** np.arange(8)
    pts = spread_points(geo, 5, rng)
    e1 = e2 = 0.0
    slopes = []
    for x, d in pts:
        g = g_ladder(d, x, hs)
        rows = asymptotic_match(d, x, hs, 3, g_values=g)
        e1 = max(e1, rows[0].rel_error)
        e2 = max(e2, rows[1].rel_error)
        exact = [r.exact for r in rows]
        slopes.append([remainder_slope(g, hs, exact, N) for N in (1, 2)])
    slopes = np.array(slopes)
    slope_err = float(np.max(np.abs(slopes - np.array([2.0, 3.0]))))
    ok = e1 <= 1e-3 and e2 <= 1e-2 and slope_err <= 0.2
    report("7 asymptotics", ok, f"a1 error {e1:.2e} (<=1e-3), a2 error {e2:.2e} (<=1e-2), "
                                f"slope deviation {slope_err:.3f} (<=0.2)")
    assert ok


def test_criterion_08_conformal(rng):
    worst = 0.0
    for coeffs in (Q_AIRY, Q_WELL, Q_BARRIER):
        for d in geometry(coeffs).domains:
            for x in sample_domain(d, 50, rng, RegionParams(0.01, 0.05)):
                worst = max(worst, conformal_roundtrip(d, x))
    strip = next(d for d in geometry(Q_BARRIER).domains if d.kind == "type2")
    im = strip.field.action.imag[strip.field.mask]
    im = im[np.isfinite(im)]
    confined = bool(np.all((im > 0) & (im < strip.mu)))
    approach = max(im.min(), strip.mu - im.max()) / strip.mu
    ok = worst <= 1e-7 and confined and approach <= 0.01
    report("8 conformal verification", ok,
           f"round trip {worst:.2e} (<=1e-7), strip image inside (0, mu={strip.mu:.6f}): {confined}, "
           f"edge approach {approach:.4f} of mu (<=0.01)")
    assert ok


def test_criterion_09_decay():
    errs = []
    bounded = True
    for m in (1, 2, 3):
        Q = poly([0] * m + [1])
        force = forcing(Q)
        traj = integrate(Q, 1.0 + 1.0j, -1.0, 2.0e4, eta=0.05)
        errs.append(abs(decay_exponent(traj) - 2.0 / (m + 2)))
        w = np.abs(force.c_over_q(traj.y)) * (1.0 + traj.s ** 2)
        early = float(np.max(w[traj.s <= 2.0e3]))
        late = float(np.max(w))
        bounded &= late <= 1.05 * early
    err = max(errs)
    ok = err <= 0.05 and bounded
    report("9 decay exponents", ok, f"max exponent error {err:.2e} (<=0.05), |C/Q|(1+t^2) bounded: {bounded}")
    assert ok


def test_criterion_10_extension():
    geo = geometry(Q_WELL)
    region = None
    for c in geo.curves:
        if c.terminus is not None:
            continue
        for d in geo.domains:
            try:
                r = build_extension(geo, c.curve_id, d.label)
            except Exception:
                continue
            if r.side == 1 and r.base.label == d.label:
                region = r
                break
        if region is not None:
            break
    assert region is not None
    curve = geo.curves[region.curve_id]
    pts = []
    for k in range(60, len(curve.polyline) - 1, 12):
        p = curve.polyline[k]
        if abs(p) > 2.5:
            break
        tang = curve.polyline[k + 1] - curve.polyline[k - 1]
        x = p + 0.12 * 1j * tang / abs(tang)
        if region.contains(x) and region.other.label == geo.labels[geo.grid.index(x)]:
            pts.append(x)
    pts = pts[:10]
    sol, _ = extend_adjoining(region, 0.1, pts)
    worst = max(max(residual(sol, x).finite_difference, residual(sol, x).riccati) for x in pts)
    # slit points: off the turning-point disc, Re S_a > -epsilon and |Im S_a| < delta
    src = curve.source.location
    slit = []
    for k in range(1, 40):
        for off in (0.0, 0.01, -0.01):
            x = complex(curve.polyline[k]) + off * 1j
            if abs(x - src) <= region.epsilon or not geo.grid.contains(x):
                continue
            S = region.field.point(x).action
            if S.real > -region.epsilon and abs(S.imag) < region.delta:
                slit.append(x)
    rejected = len(slit) >= 3 and all(not region.contains(x) for x in slit)
    ok = len(pts) == 10 and worst <= 1e-5 and rejected
    report("10 adjoining-domain extension", ok,
           f"{len(pts)} points across curve {region.curve_id}, residual {worst:.2e} (<=1e-5), "
           f"{len(slit)} slit points rejected: {rejected}")
    assert ok

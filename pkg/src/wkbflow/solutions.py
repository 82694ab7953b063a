"""Exact WKB solutions ``U_+`` and ``U_-`` and their verification.

On a domain with branch ``sqrt(Q)`` (``Im S_a > 0`` inside),

    U_+(x, h) = Q^(-1/4) exp( S_a(x)/h + int_{-inf}^0 g_+(phi(t, x), h) dt),

with ``g_+`` from the plus iteration on the backward orbit.  ``U_-`` is
the same construction for the opposite branch: ``-S_a`` in the exponent
and the orbit of ``-sqrt(Q)``, which is the forward orbit of ``sqrt(Q)``.
Both use the same fourth root.  The logarithmic derivative is exact,
``U' / U = S / h`` with ``S = s sqrt(Q) - h Q'/(4Q) + h s sqrt(Q) g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .branch import BranchPoint, aligned_sqrt
from .errors import ConfigError, NumericalError, RegionError
from .polynomial import ComplexPolynomial, cached_turning_points
from .series import ForcingTerm, forcing, riccati_coefficients
from .solver import (ConvolutionGrid, IterationState, build_grid, iterate, stencil_derivatives,
                     stencil_points)
from .stokes import (ActionField, RegionParams, StokesDomain, StokesGeometry, in_region)


class OrbitCache:
    """Convolution grids keyed by point, branch and kind; reused for smaller ``h``."""

    def __init__(self, h_max: float | None = None, eta: float = 0.01):
        self.h_max = h_max
        self.eta = eta
        self._grids = {}

    def grid(self, Q, force, x, sqrt_x, kind, h) -> ConvolutionGrid:
        key = (Q, complex(x), complex(sqrt_x), kind)
        g = self._grids.get(key)
        if g is None or g.h_max < h:
            hm = max(h, self.h_max or 0.0)
            g = build_grid(Q, x, sqrt_x, hm, kind, force=force, eta=self.eta)
            self._grids[key] = g
        return g


@dataclass(frozen=True)
class PointData:
    x: complex
    branch: BranchPoint
    g: complex                # g(x, h) = sum_n G_n(0)
    g_integral: complex       # int_{-inf}^0 g(phi(t, x), h) dt
    S: complex                # logarithmic derivative times h
    U: complex
    state: IterationState


@dataclass
class WKBSolution:
    """``U_sign`` on a region, evaluated lazily and cached per point.

    ``region`` is a :class:`StokesDomain` or an :class:`ExtensionRegion`;
    both carry the action field that fixes the branch.
    """

    region: object
    sign: int
    h: float
    params: RegionParams = field(default_factory=RegionParams)
    N_max: int = 60
    rtol: float = 1e-12
    orbits: OrbitCache = field(default_factory=OrbitCache)
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ConfigError("sign must be +1 or -1", sign=self.sign)
        if not self.h > 0:
            raise ConfigError("h must be positive", h=self.h)
        self.Q = self.region.field.Q
        self.force = forcing(self.Q)
        self._dQ = self.Q.derivative()

    @property
    def branch(self) -> complex:
        """The domain's ``sqrt(Q)`` at the anchor (fixes the base sign)."""
        return self.region.field.point(self.region.anchor).sqrt

    def admit(self, x) -> BranchPoint:
        """Branch data at ``x``; raises :class:`RegionError` outside the admissible region."""
        return admit(self.region, self.params, x)

    def data(self, x) -> PointData:
        x = complex(x)
        hit = self.cache.get(x)
        if hit is not None:
            return hit
        bp = self.admit(x)
        kind = "plus" if self.sign == 1 else "minus"
        grid = self.orbits.grid(self.Q, self.force, x, bp.sqrt, kind, self.h)
        st = iterate(grid, self.h, N_max=self.N_max, rtol=self.rtol)
        g = st.g
        I = st.integral()
        s = self.sign * bp.sqrt
        S = s - self.h * self._dQ(x) / (4.0 * self.Q(x)) + self.h * s * g
        U = np.exp(self.sign * bp.action / self.h + I) / bp.quarter
        pd = PointData(x, bp, g, I, complex(S), complex(U), st)
        self.cache[x] = pd
        return pd

    def __call__(self, x) -> complex:
        return self.data(x).U

    def derivative(self, x) -> complex:
        d = self.data(x)
        return d.S / self.h * d.U

    def evaluate(self, xs) -> np.ndarray:
        return np.array([self(x) for x in np.atleast_1d(xs)])


def admit(region, params: RegionParams, x) -> BranchPoint:
    x = complex(x)
    if isinstance(region, StokesDomain):
        m = in_region(region, params, x)
        if not (m.omega_delta and m.d_epsilon):
            raise RegionError("point outside Omega_delta or D_epsilon", x=x,
                              in_omega_delta=m.omega_delta, in_d_epsilon=m.d_epsilon)
        return region.field.point(x)
    return region.admit(x)


def build_solution(domain, sign: int, h: float, eval_points=(), params: RegionParams | None = None,
                   orbits: OrbitCache | None = None, **kw) -> WKBSolution:
    """Construct ``U_sign`` and fill its cache at ``eval_points``.

    Raises
    ------
    GateError
        ``h`` is above the convergence gate at some point.
    RegionError
        A point is outside ``Omega_delta`` (or the extension region).
    """
    sol = WKBSolution(domain, sign, h, params or RegionParams(), orbits=orbits or OrbitCache(), **kw)
    for x in eval_points:
        sol.data(x)
    return sol


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class Residual:
    finite_difference: float
    riccati: float

    def agree(self, factor: float = 10.0, floor: float = 1e-7) -> bool:
        """Routes agree within ``factor``, or both sit below the noise ``floor``."""
        a, b = self.finite_difference, self.riccati
        if max(a, b) <= floor:
            return True
        return max(a, b) <= factor * max(min(a, b), 1e-300)


def _node_derivative(tau, G, k=7):
    """``dG/dtau`` at the last node from a degree ``k-1`` fit of the last ``k`` nodes."""
    t = tau[-k:]
    scale = max(abs(t[0]), 1e-300)
    coef = np.polyfit(t / scale, G[-k:], k - 1)
    return np.polyval(np.polyder(coef), 0.0) / scale


def residual(sol: WKBSolution, x, h: float | None = None, delta: float | None = None) -> Residual:
    """Relative residual of ``h^2 U'' = Q U`` at ``x`` by two routes.

    * finite differences: ``U''`` from the four-point complex stencil with
      spacing ``0.04 h / sqrt|Q(x)|``;
    * Riccati: ``|h S' + S^2 - Q| / |Q|`` where ``g'`` is obtained from
      the values of ``G`` along the orbit through ``x`` (no stencil).
    """
    if h is not None and h != sol.h:
        raise ConfigError("residual must use the solution's h", h=h, solution_h=sol.h)
    x = complex(x)
    d0 = sol.data(x)
    if d0.U == 0 or not np.isfinite(d0.U):
        raise NumericalError("degenerate solution value", x=x, U=d0.U)
    Q, hh = sol.Q, sol.h
    q = Q(x)
    if delta is None:
        delta = 0.04 * hh / math.sqrt(abs(q))
    pts = stencil_points(x, delta)
    try:
        Us = np.array([sol(p) for p in pts])
    except RegionError as exc:
        raise RegionError("residual stencil leaves the region", x=x, delta=delta) from exc
    _, d2 = stencil_derivatives(d0.U, Us, delta)
    fd = abs(hh * hh * d2 - q * d0.U) / (abs(q) * abs(d0.U))

    st = d0.state
    gr = st.grid
    s = sol.sign * d0.branch.sqrt
    dGdtau = _node_derivative(gr.tau, st.G_total)
    # along the orbit of the kernel branch dy/dtau = 1/s
    dg = s * dGdtau
    dQ = sol._dQ
    d2Q = dQ.derivative()
    ds = dQ(x) / (2.0 * s)
    dS = ds - hh * (d2Q(x) * q - dQ(x) ** 2) / (4.0 * q * q) + hh * (ds * d0.g + s * dg)
    ric = abs(hh * dS + d0.S ** 2 - q) / abs(q)
    return Residual(float(fd), float(ric))


def wronskian(sol_plus: WKBSolution, sol_minus: WKBSolution, x_list, h: float | None = None) -> np.ndarray:
    """``U_+ U_-' - U_+' U_-`` from the exact logarithmic derivatives."""
    if sol_plus.h != sol_minus.h:
        raise ConfigError("solutions use different h", h_plus=sol_plus.h, h_minus=sol_minus.h)
    out = []
    for x in x_list:
        a = sol_plus.data(x)
        b = sol_minus.data(x)
        out.append(a.U * b.U * (b.S - a.S) / sol_plus.h)
    return np.array(out)


def relative_spread(values) -> float:
    v = np.asarray(values)
    m = np.mean(v)
    return float(np.max(np.abs(v - m)) / abs(m))


def direct_ode_check(sol: WKBSolution, x0, x1, n: int = 6, rtol: float = 1e-12) -> float:
    """Max relative deviation between ``U`` and a direct integration of ``h^2 y'' = Q y``.

    The ODE is integrated along the segment ``x0 -> x1`` with DOP853 from
    ``(U(x0), U'(x0))`` and compared with ``U`` at ``n`` points.  Choose
    ``x1`` with :func:`stable_arc_end` so that ``U`` is not recessive along
    the segment.
    """
    Q, h = sol.Q, sol.h
    x0, x1 = complex(x0), complex(x1)
    d = x1 - x0
    y0 = [sol(x0), sol.derivative(x0)]

    def rhs(s, y):
        x = x0 + s * d
        return [d * y[1], d * Q(x) / (h * h) * y[0]]

    ss = np.linspace(0.0, 1.0, n + 1)[1:]
    r = solve_ivp(rhs, (0.0, 1.0), np.array(y0, dtype=complex), method="DOP853", t_eval=ss,
                  rtol=rtol, atol=1e-300)
    if not r.success:
        raise NumericalError("direct integration failed", message=r.message)
    U = np.array([sol(x0 + s * d) for s in ss])
    return float(np.max(np.abs(r.y[0] - U) / np.abs(U)))


def stable_arc_end(sol: WKBSolution, x0, length: float) -> complex:
    """End point of a segment from ``x0`` along which ``|U|`` grows fastest.

    Integrating ``h^2 y'' = Q y`` forward is well conditioned only when the
    target solution is the dominant one along the path; the direction
    ``conj(S)`` maximises the growth rate ``Re(S dx)/h``.
    """
    S = sol.data(x0).S
    return complex(x0) + length * np.conj(S) / abs(S)


def tail_certificate(state: IterationState) -> float:
    """``max |G(tau)| (1 + |tau|)^2`` over the orbit nodes past the padding."""
    gr = state.grid
    i = gr.i_star
    return float(np.max(np.abs(state.G_total[i:]) * (1.0 + np.abs(gr.tau[i:])) ** 2))


# ---------------------------------------------------------------------------
# asymptotics


@dataclass(frozen=True)
class AsymptoticRow:
    n: int
    fitted: complex           # a_n(x)
    exact: complex            # s_{n+1}(x) / sqrt(Q(x))
    rel_error: float


def exact_coefficients(Q: ComplexPolynomial, x, sqrt_x, N: int) -> list[complex]:
    """``a_1 .. a_N`` at ``x`` from the formal series, ``a_n = s_{n+1}/sqrt(Q)``."""
    s = riccati_coefficients(Q, 1, N + 1)
    return [complex(s[n + 1](x, sqrt_x) / sqrt_x) for n in range(1, N + 1)]


def g_ladder(domain, x, h_list, sign: int = 1, params=None, **kw) -> np.ndarray:
    """``g(x, h)`` for each ``h`` on one shared orbit."""
    orbits = OrbitCache(h_max=max(h_list))
    out = []
    for h in h_list:
        sol = WKBSolution(domain, sign, h, params or RegionParams(), orbits=orbits, **kw)
        out.append(sol.data(x).g)
    return np.array(out)


def asymptotic_match(domain, x, h_list, N: int = 3, params=None, g_values=None,
                     extra_terms: int = 2) -> list[AsymptoticRow]:
    """Least-squares fit ``g(x, h) ~ sum_{k=1}^{N+extra} a_k h^k`` compared with the formal series.

    Only ``a_1 .. a_N`` are reported.  The ``extra_terms`` higher powers
    absorb the truncation error that would otherwise bias the last
    reported coefficient.

    Raises
    ------
    ConfigError
        Ladder shorter than ``N + extra_terms + 2`` values, or ``N`` outside ``1..3``.
    """
    h = np.asarray(h_list, dtype=float)
    K = N + extra_terms
    if not 1 <= N <= 3:
        raise ConfigError("N must be between 1 and 3", N=N)
    if len(h) < max(5, K + 2):
        raise ConfigError("ladder too short for the fit", count=len(h), terms=K)
    g = g_ladder(domain, x, h, params=params) if g_values is None else np.asarray(g_values)
    A = np.stack([h ** k for k in range(1, K + 1)], axis=1)
    scale = np.max(np.abs(A), axis=0)
    if np.linalg.cond(A / scale) > 1e12:
        raise NumericalError("ill-conditioned asymptotic fit", cond=float(np.linalg.cond(A / scale)))
    coef, *_ = np.linalg.lstsq((A / scale).astype(complex), g, rcond=None)
    coef = coef / scale
    bp = domain.field.point(x)
    exact = exact_coefficients(domain.field.Q, complex(x), bp.sqrt, N)
    return [AsymptoticRow(k + 1, complex(coef[k]), exact[k], float(abs(coef[k] - exact[k]) / abs(exact[k])))
            for k in range(N)]


def remainder_slope(g_values, h_list, exact, N: int) -> float:
    """Log-log slope of ``|g - sum_{k<=N} a_k h^k|`` against ``h``."""
    h = np.asarray(h_list, dtype=float)
    rem = np.abs(np.asarray(g_values) - sum(exact[k] * h ** (k + 1) for k in range(N)))
    slope, _ = np.polyfit(np.log(h), np.log(rem), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# adjoining domains


@dataclass
class ExtensionRegion:
    """``Omega ∪ C ∪ Omega'`` for two domains sharing the Stokes curve ``C`` from ``a``.

    ``side`` is ``+1`` when ``Re S_a < 0`` on ``C`` (the plus solution
    extends) and ``-1`` when ``Re S_a > 0`` (the minus solution extends).
    Points of the slit ``{Re(side * S_a) > -epsilon, |Im S_a| < delta}``
    and points within ``epsilon`` of a turning point are excluded.
    """

    base: StokesDomain
    other: StokesDomain
    curve_id: int
    side: int
    epsilon: float
    delta: float
    field: ActionField = field(repr=False)
    anchor: complex = 0j

    @property
    def Q(self):
        return self.field.Q

    @property
    def mu(self):
        return math.inf

    def classify(self, x):
        """``(inside, action)`` for the extended region."""
        x = complex(x)
        fld = self.field
        if any(abs(x - t.location) <= self.epsilon for t in cached_turning_points(self.Q)):
            return False, complex("nan")
        if not fld.grid.contains(x) or fld.distance_to_cells(x) > 2.0 * fld.grid.cell:
            return False, complex("nan")
        bp = fld.point(x)
        S = bp.action
        if abs(S.imag) < self.delta and (self.side * S).real > -self.epsilon:
            return False, S
        # the Omega part lies below mu (type-2 base), the Omega' part above -mu'
        if S.imag >= self.base.mu or S.imag <= -self.other.mu:
            return False, S
        return True, S

    def contains(self, x) -> bool:
        return self.classify(x)[0]

    def admit(self, x) -> BranchPoint:
        ok, S = self.classify(x)
        if not ok:
            raise RegionError("point outside the extension region", x=complex(x), action=S)
        return self.field.point(x)


def build_extension(geometry: StokesGeometry, curve_id: int, base_label: int | None = None,
                    epsilon: float = 0.05, delta: float = 0.05) -> ExtensionRegion:
    """The extension region across the Stokes curve ``curve_id``.

    ``base_label`` picks which of the two adjacent domains is ``Omega``
    (default: the first).  The branch is that of ``Omega``; the sign
    conditions are verified on the grid.

    Raises
    ------
    RegionError
        If the curve does not separate two classified domains, or the sign
        conditions fail on samples.
    """
    from scipy import ndimage

    curve = geometry.curves[curve_id]
    grid = geometry.grid
    band = ndimage.binary_dilation(geometry.curve_cells[curve_id], structure=np.ones((3, 3), bool))
    pts = grid.points()
    tps = cached_turning_points(geometry.Q)
    near_tp = np.zeros(grid.shape, dtype=bool)
    for t in tps:
        near_tp |= np.abs(pts - t.location) <= 6 * grid.cell
    near = ndimage.binary_dilation(band, structure=np.ones((3, 3), bool)) & ~near_tp
    adj = [d for d in geometry.domains if d.kind != "unsupported" and np.any(near & (geometry.labels == d.label))]
    if len(adj) != 2:
        raise RegionError("curve does not separate exactly two domains", curve=curve_id, adjacent=len(adj))
    if base_label is not None:
        adj.sort(key=lambda d: d.label != base_label)
    base, other = adj
    others_band = np.zeros(grid.shape, dtype=bool)
    for k, cc in enumerate(geometry.curve_cells):
        if k != curve_id and not _same_arc(geometry.curves[k], curve):
            others_band |= ndimage.binary_dilation(cc, structure=np.ones((3, 3), bool))
    tp_disc = np.zeros(grid.shape, dtype=bool)
    for t in tps:
        tp_disc |= np.abs(pts - t.location) <= 2.5 * grid.cell
    union = (geometry.labels == base.label) | (geometry.labels == other.label) | (band & ~others_band & ~tp_disc)
    union = ndimage.binary_fill_holes(union) & ~tp_disc
    lab, _ = ndimage.label(union)
    a_idx = grid.index(base.anchor)
    union = lab == lab[a_idx]
    root = int(np.ravel_multi_index(a_idx, grid.shape))
    bp = base.field.point(base.anchor)
    fld = ActionField.build(geometry.Q, grid, union, root, bp.sqrt, bp.action, bp.quarter)
    im_other = fld.action.imag[geometry.labels == other.label]
    if not np.all(im_other[np.isfinite(im_other)] < 0):
        raise RegionError("Im S_a is not negative on the adjoining domain", curve=curve_id)
    re_on_c = []
    for p in curve.polyline[1:]:
        if grid.contains(p) and abs(p - curve.source.location) > 5 * grid.cell:
            re_on_c.append(fld.point(p).action.real)
    re_on_c = np.array(re_on_c)
    if np.all(re_on_c < 0):
        side = 1
    elif np.all(re_on_c > 0):
        side = -1
    else:
        raise RegionError("Re S_a changes sign along the shared curve", curve=curve_id)
    return ExtensionRegion(base, other, curve_id, side, epsilon, delta, fld, base.anchor)


def _same_arc(c1, c2) -> bool:
    """True when two curves trace the same arc in opposite directions."""
    return (c1.terminus is not None and c2.terminus is not None
            and c1.terminus == c2.source and c2.terminus == c1.source)


def extend_adjoining(region: ExtensionRegion, h: float, eval_points, params: RegionParams | None = None,
                     orbits: OrbitCache | None = None) -> tuple[WKBSolution, np.ndarray]:
    """``U_side`` on points of the extension region, with the same construction.

    Every orbit used must stay in the region: samples are checked against
    the slit condition and the turning-point clearance.

    Raises
    ------
    RegionError
        A point is outside the region, or an orbit from it leaves the region.
    """
    sol = WKBSolution(region, region.side, h, params or RegionParams(), orbits=orbits or OrbitCache())
    vals = []
    for x in eval_points:
        d = sol.data(x)
        _check_orbit(region, d)
        vals.append(d.U)
    return sol, np.array(vals)


def _check_orbit(region: ExtensionRegion, d: PointData):
    gr = d.state.grid
    sigma = 1 if gr.kind == "plus" else -1
    # in the region's branch the kernel orbit has S(phi(tau)) = S(x) + sigma * tau
    S_orbit = d.branch.action + sigma * gr.tau
    if abs(d.branch.action.imag) < region.delta and np.any((region.side * S_orbit).real > -region.epsilon):
        raise RegionError("orbit enters the excluded slit", x=d.x)
    tps = cached_turning_points(region.Q)
    dist = min(np.min(np.abs(gr.y - t.location)) for t in tps)
    if dist <= region.epsilon:
        raise RegionError("orbit enters a turning-point clearance", x=d.x, distance=float(dist))


def continuity_defect(sol: WKBSolution, x_on_curve, normal, delta: float = 0.005, n: int = 6) -> float:
    """Relative mismatch of ``U`` across a curve against one-sided polynomial extrapolation.

    ``U`` is sampled at ``x + k*delta*normal`` for ``k = 1..n`` on each side;
    a degree ``n-1`` polynomial through one side is extrapolated to the
    nearest point on the other side.
    """
    x = complex(x_on_curve)
    nrm = complex(normal) / abs(complex(normal))
    ks = np.arange(1, n + 1)
    plus = np.array([sol(x + k * delta * nrm) for k in ks])
    minus = np.array([sol(x - k * delta * nrm) for k in ks])
    pr = np.polyfit(ks.astype(float), plus.real, n - 1) + 1j * np.polyfit(ks.astype(float), plus.imag, n - 1)
    ext = np.polyval(pr, -1.0)
    return float(abs(ext - minus[0]) / abs(minus[0]))

"""Kernel operators and the convergent iteration for ``g(x, h)``.

All orders live on one backward orbit ``phi(tau, x)``, ``tau <= 0``.
Writing ``G_n(tau) = g_n(phi(tau, x), h)``, the group property of the
flow turns each kernel application into a half-line convolution,

    G_n(tau) = int_{-inf}^{tau} exp(2 (u - tau) / h) ghat_n(u) du,

with ``ghat_1 = c = C/Q`` on the orbit and
``ghat_n = -sum_{i+j=n} G_i G_j``.  Equivalently
``G_n' = -2 G_n / h + ghat_n``, which also supplies the exact node
derivatives used by the cubic Hermite product integration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .branch import aligned_sqrt
from .errors import ConfigError, GateError, NumericalError
from .flow import FlowTrajectory, integrate
from .polynomial import ComplexPolynomial, RationalFunction, cached_turning_points, geometry_scale
from .series import ForcingTerm, ThetaEnvelope, forcing, theta

PAD_WIDTHS = 20.0          # start-up padding, in units of h
KERNEL_CUTOFF = 1e-16      # discarded kernel weight exp(2 t / h) at the far end
_RAY_X, _RAY_W = np.polynomial.legendre.leggauss(40)
_RAY_V = 0.5 * (_RAY_X + 1.0)
_RAY_W = 0.5 * _RAY_W


# ---------------------------------------------------------------------------
# trajectory grids


@dataclass
class ConvolutionGrid:
    """Samples of one orbit on ascending nodes ``tau[0] < ... < tau[-1] = 0``.

    For the plus kernel the orbit is the backward flow of the given branch.
    The minus kernel is the plus kernel of the opposite branch, so a minus
    grid stores the backward orbit of ``-sqrt`` (the forward orbit of the
    original branch) with ``kind == "minus"``.

    ``i_star`` is the first node past the start-up padding; ``c`` and
    ``dc`` are ``C/Q`` and its ``tau`` derivative at the nodes.
    """

    Q: ComplexPolynomial = field(repr=False)
    force: ForcingTerm = field(repr=False)
    x: complex
    sqrt_x: complex
    kind: str
    h_max: float
    tau: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    sqrt_y: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    dc: np.ndarray = field(repr=False)
    i_star: int
    traj: FlowTrajectory = field(repr=False)

    @property
    def nodes(self):
        return self.tau

    @property
    def c_values(self):
        return self.c

    @property
    def T_max(self) -> float:
        return float(-self.tau[0])


def source_on(Q, y, sqrt_y, f):
    """Values and ``tau`` derivatives of ``f(y)/Q(y)`` on orbit samples.

    ``f`` is a polynomial or rational function; along the orbit
    ``dy/dtau = 1/sqrt(Q)``.
    """
    r = (f if isinstance(f, RationalFunction) else RationalFunction(f)) / RationalFunction(Q)
    return r(y), r.derivative()(y) / sqrt_y


def build_grid(Q: ComplexPolynomial, x, sqrt_x, h_max: float, kind: str = "plus", *,
               force: ForcingTerm | None = None, eta: float = 0.01, rtol: float = 1e-11,
               clearance: float | None = None) -> ConvolutionGrid:
    """Trace the orbit used for every ``h <= h_max`` at ``x``.

    The orbit runs until ``|phi| >= max(4 * scale, 2|x|)`` while moving
    outward and ``-t >= (h_max/2) ln(1/KERNEL_CUTOFF)``; it is then padded
    by ``PAD_WIDTHS * h_max`` so the start-up transient of the recurrences
    has decayed below ``exp(-2 PAD_WIDTHS)`` at ``i_star``.
    """
    if kind not in ("plus", "minus"):
        raise ConfigError("kind must be 'plus' or 'minus'", kind=kind)
    if h_max <= 0:
        raise ConfigError("h must be positive", h=h_max)
    force = forcing(Q) if force is None else force
    x = complex(x)
    sq = complex(sqrt_x) if kind == "plus" else -complex(sqrt_x)
    tps = cached_turning_points(Q)
    R = max(4.0 * geometry_scale(tps), 2.0 * abs(x))
    T_iter = 0.5 * h_max * math.log(1.0 / KERNEL_CUTOFF)
    main = integrate(Q, x, -1.0, 1e12, sqrt_x=sq, eta=eta, rtol=rtol, clearance=clearance,
                     stop_radius=R, s_min=T_iter, turning_points=tps)
    if main.status != "radius":
        raise NumericalError("orbit did not reach the far field", x=x, status=main.status,
                             reached=complex(main.y[-1]))
    pad = integrate(Q, main.y[-1], -1.0, PAD_WIDTHS * h_max, sqrt_x=main.sqrt_y[-1], eta=eta,
                    rtol=rtol, clearance=clearance, turning_points=tps)
    if pad.status != "done":
        raise NumericalError("orbit padding failed", x=x, status=pad.status)
    s = np.concatenate([main.s, main.s[-1] + pad.s[1:]])
    y = np.concatenate([main.y, pad.y[1:]])
    sy = np.concatenate([main.sqrt_y, pad.sqrt_y[1:]])
    traj = FlowTrajectory(Q, x, sq, -1.0 + 0j, s, y, sy, "done")
    tau = -s[::-1]
    y, sy = y[::-1], sy[::-1]
    c, dc = source_on(Q, y, sy, force.C)
    i_star = len(pad.s) - 1
    return ConvolutionGrid(Q, force, x, complex(sqrt_x), kind, float(h_max), tau, y, sy, c, dc,
                           i_star, traj)


# ---------------------------------------------------------------------------
# product integration


def _moments(xs):
    """``L_j = int_0^1 exp(-x u) u^j du`` for ``j = 0..3``, elementwise."""
    xs = np.asarray(xs, dtype=float)
    L = np.empty((4,) + xs.shape)
    small = xs < 1.0
    if np.any(small):
        xv = xs[small]
        term = np.ones_like(xv)
        acc = [np.zeros_like(xv) for _ in range(4)]
        for k in range(26):
            for j in range(4):
                acc[j] += term / (j + k + 1)
            term = term * (-xv) / (k + 1)
        for j in range(4):
            L[j][small] = acc[j]
    big = ~small
    if np.any(big):
        xv = xs[big]
        e = np.exp(-xv)
        l0 = (1.0 - e) / xv
        l1 = (l0 - e) / xv
        l2 = (2 * l1 - e) / xv
        l3 = (3 * l2 - e) / xv
        L[0][big], L[1][big], L[2][big], L[3][big] = l0, l1, l2, l3
    return L


def panel_weights(dtau, h):
    """Exact-exponential cubic Hermite weights for each panel.

    For a panel of width ``D`` the contribution to the recurrence is
    ``D * (w00 f0 + w10 D f0' + w01 f1 + w11 D f1')`` and the carried
    value is multiplied by ``decay = exp(-2 D / h)``.
    """
    dtau = np.asarray(dtau, dtype=float)
    xs = 2.0 * dtau / h
    L0, L1, L2, L3 = _moments(xs)
    return {
        "decay": np.exp(-xs),
        "w00": 3 * L2 - 2 * L3,
        "w10": L2 - L3,
        "w01": L0 - 3 * L2 + 2 * L3,
        "w11": -L1 + 2 * L2 - L3,
    }


def convolve(tau, f, df, h, g0=None, weights=None):
    """``G(tau_k) = int_{tau_0}^{tau_k} exp(2(u - tau_k)/h) f(u) du + decay * g0``.

    ``g0`` defaults to the adiabatic start ``(h/2) f - (h^2/4) f'`` at the
    first node, the two leading terms of the infinite-history value.
    """
    f = np.asarray(f, dtype=complex)
    df = np.asarray(df, dtype=complex)
    D = np.diff(tau)
    w = panel_weights(D, h) if weights is None else weights
    b = D * (w["w00"] * f[:-1] + w["w10"] * D * df[:-1] + w["w01"] * f[1:] + w["w11"] * D * df[1:])
    if g0 is None:
        g0 = 0.5 * h * f[0] - 0.25 * h * h * df[0]
    return kernels.linear_recurrence(w["decay"], b, g0)


def half_line_laplace(grid: ConvolutionGrid, f_values, h, df_values=None) -> complex:
    """``int_{-T_max}^0 exp(2 t / h) f(t) dt`` by exact-weight product integration.

    ``f_values`` (and optionally ``df_values``, the ``tau`` derivative) are
    given on ``grid.tau``.  Without derivatives, second-order one-sided
    differences are used.
    """
    tau = grid.tau if isinstance(grid, ConvolutionGrid) else np.asarray(grid, dtype=float)
    f = np.asarray(f_values, dtype=complex)
    df = np.gradient(f, tau, edge_order=2) if df_values is None else np.asarray(df_values, dtype=complex)
    return complex(convolve(tau, f, df, h, g0=0.0)[-1])


def first_order(grid: ConvolutionGrid, h) -> np.ndarray:
    """``G_1`` at every node; ``G_1[-1] = g_1(x, h)``."""
    return convolve(grid.tau, grid.c, grid.dc, h)


# ---------------------------------------------------------------------------
# the iteration


def catalan(n_max: int) -> list[int]:
    """``M_1 .. M_{n_max}`` from ``M_1 = 1``, ``M_n = sum_{i+j=n} M_i M_j``."""
    M = [0, 1]
    for n in range(2, n_max + 1):
        M.append(sum(M[i] * M[n - i] for i in range(1, n)))
    return M[1:]


def catalan_tail(N: int, tau_ratio: float, terms: int = 2000) -> float:
    """``sum_{n>N} M_n tau**n`` for ``tau <= 1/4`` (zero for ``tau == 0``)."""
    if tau_ratio <= 0.0:
        return 0.0
    if tau_ratio >= 0.25:
        return math.inf
    # term_n = M_n tau^n with M_{n+1}/M_n = 2(2n-1)/(n+1); work in logs to avoid overflow
    log_term = math.log(tau_ratio)
    for n in range(1, N + 1):
        log_term += math.log(2 * (2 * n - 1) / (n + 1)) + math.log(tau_ratio)
    total = 0.0
    n = N + 1
    for _ in range(terms):
        t = math.exp(log_term)
        total += t
        if t <= 1e-17 * total or t == 0.0:
            break
        log_term += math.log(2 * (2 * n - 1) / (n + 1)) + math.log(tau_ratio)
        n += 1
    return total


@dataclass
class IterationState:
    """Orders ``G_1 .. G_N`` on one grid, with the bounds that control them.

    ``bounds[n-1] = M_n (h/2)**(2n-1) Theta**n`` and ``tail`` bounds the sum
    of the neglected orders at ``tau = 0``.
    """

    grid: ConvolutionGrid = field(repr=False)
    h: float
    G: list = field(repr=False)
    dG: list = field(repr=False)
    M: list
    N_used: int
    tail: float
    theta: ThetaEnvelope
    bounds: list

    @property
    def values(self) -> np.ndarray:
        """``|G_n(0)|`` for ``n = 1..N``."""
        return np.array([abs(g[-1]) for g in self.G])

    @property
    def G_total(self) -> np.ndarray:
        return np.sum(self.G, axis=0)

    @property
    def dG_total(self) -> np.ndarray:
        return np.sum(self.dG, axis=0)

    @property
    def g(self) -> complex:
        """``g(x, h) = sum_n G_n(0)``."""
        return complex(self.G_total[-1])

    def bound_holds(self, slack: float = 1e-9) -> bool:
        return bool(np.all(self.values <= np.asarray(self.bounds) * (1.0 + slack)))

    def table(self):
        """Rows ``(n, |G_n(0)|, bound, ratio |G_n(0)|/|G_{n-1}(0)|)``."""
        vals = self.values
        rows = []
        for n in range(1, self.N_used + 1):
            ratio = vals[n - 1] / vals[n - 2] if n > 1 and vals[n - 2] > 0 else float("nan")
            rows.append((n, float(vals[n - 1]), float(self.bounds[n - 1]), float(ratio)))
        return rows

    def integral(self) -> complex:
        """``int_{-inf}^0 G(tau) dtau`` for the summed ``G``.

        Nodes past the padding are integrated with the cubic Hermite rule;
        the part beyond ``tau* = tau[i_star]`` uses the exact identity
        ``int G = (h/2)(int c - G(tau*) - int G^2)`` with
        ``int G^2 ~ (h^2/4) int c^2 - (h^3/8) c(tau*)^2``; the ``c``
        integrals are moved onto the ray ``y = y*/v^2`` and done by
        40-point Gauss-Legendre.
        """
        gr = self.grid
        h = self.h
        i = gr.i_star
        tau = gr.tau[i:]
        G = self.G_total[i:]
        dG = self.dG_total[i:]
        D = np.diff(tau)
        body = np.sum(0.5 * D * (G[:-1] + G[1:]) + D * D / 12.0 * (dG[:-1] - dG[1:]))
        int_c, int_c2 = ray_tail(gr.Q, gr.force, gr.y[i], gr.sqrt_y[i])
        c_star = gr.c[i]
        int_G2 = 0.25 * h * h * int_c2 - 0.125 * h ** 3 * c_star ** 2
        tail = 0.5 * h * (int_c - G[0] - int_G2)
        return complex(body + tail)


def ray_tail(Q: ComplexPolynomial, force: ForcingTerm, y_star, sqrt_star):
    """``(int c dtau, int c^2 dtau)`` over the orbit beyond ``y*`` (out to infinity).

    With ``dtau = sqrt(Q) dy`` these become ``int C/sqrt(Q) dy`` and
    ``int c^2 sqrt(Q) dy`` from infinity to ``y*``, evaluated on the ray
    ``y = y*/v**2``.
    """
    v = _RAY_V[::-1]                      # from v = 1 (y*) inward to v -> 0
    w = _RAY_W[::-1]
    y = y_star / v ** 2
    sq = kernels.align_sqrt_sequence(Q(y), sqrt_star)
    dy_dv = -2.0 * y_star / v ** 3
    c = force.c_over_q(y)
    int_c = np.sum(w * c * sq * dy_dv)
    int_c2 = np.sum(w * c * c * sq * dy_dv)
    return complex(int_c), complex(int_c2)


def iterate(grid: ConvolutionGrid, h: float, N_max: int = 60, rtol: float = 1e-12,
            tol: float | None = None, envelope: ThetaEnvelope | None = None) -> IterationState:
    """Sum the convergent series ``g = sum G_n(0)`` on one grid.

    Stops at the first ``N`` whose rigorous tail
    ``(2/h) sum_{n>N} M_n ((h/2)^2 Theta)^n`` is below ``tol``
    (default ``rtol * |G_1(0)|``).

    Raises
    ------
    GateError
        If ``h**2 * Theta >= 1/2``.
    NumericalError
        If ``N_max`` orders do not reach the tolerance.
    """
    if h <= 0 or h > grid.h_max * (1 + 1e-12):
        raise ConfigError("h must lie in (0, h_max] of the grid", h=h, h_max=grid.h_max)
    env = theta(None, grid.x, grid.traj, grid.force) if envelope is None else envelope
    Th = env.value
    if h * h * Th >= 0.5:
        raise GateError("h too large for Theta(x)", x=grid.x, h=h, theta=Th, gate=h * h * Th)
    w = panel_weights(np.diff(grid.tau), h)
    G = [convolve(grid.tau, grid.c, grid.dc, h, weights=w)]
    dG = [-2.0 * G[0] / h + grid.c]
    if tol is None:
        tol = rtol * max(abs(G[0][-1]), 1e-300)
    ratio = 0.25 * h * h * Th
    M = catalan(N_max)
    N = 1
    tail = (2.0 / h) * catalan_tail(N, ratio)
    while tail >= tol:
        if N >= N_max:
            raise NumericalError("iteration budget exhausted", N_max=N_max, tail=tail, tol=tol)
        n = N + 1
        src = np.zeros_like(G[0])
        dsrc = np.zeros_like(G[0])
        for i in range(1, n):
            j = n - i
            src -= G[i - 1] * G[j - 1]
            dsrc -= dG[i - 1] * G[j - 1] + G[i - 1] * dG[j - 1]
        Gn = convolve(grid.tau, src, dsrc, h, weights=w)
        G.append(Gn)
        dG.append(-2.0 * Gn / h + src)
        N = n
        tail = (2.0 / h) * catalan_tail(N, ratio)
    bounds = [M[n - 1] * (h / 2) ** (2 * n - 1) * Th ** n for n in range(1, N + 1)]
    return IterationState(grid, h, G, dG, M[:N], N, tail, env, bounds)


def minus_branch(grid_forward: ConvolutionGrid, h: float, **kw) -> IterationState:
    """The minus-kernel iteration on a forward (``kind == "minus"``) grid."""
    if grid_forward.kind != "minus":
        raise ConfigError("minus_branch needs a grid built with kind='minus'")
    return iterate(grid_forward, h, **kw)


# ---------------------------------------------------------------------------
# pointwise identities


def stencil_points(x, delta):
    x = complex(x)
    return np.array([x + delta, x - delta, x + 1j * delta, x - 1j * delta])


def stencil_derivatives(f0, fs, delta):
    """First and second derivatives from the four-point complex stencil.

    ``fs`` holds values at ``x+d, x-d, x+id, x-id``; both formulas are
    exact for polynomials of degree 5 (error ``O(d**4)``), given analyticity.
    """
    fp, fm, fi, fmi = fs
    d1 = (fp - fm - 1j * (fi - fmi)) / (4.0 * delta)
    d2 = (fp + fm - fi - fmi) / (2.0 * delta * delta)
    return d1, d2


def distance_scale(Q: ComplexPolynomial, x) -> float:
    return min(abs(complex(x) - tp.location) for tp in cached_turning_points(Q))


@dataclass(frozen=True)
class KernelCheck:
    value: complex          # (K_+ f)(x, h)
    lhs: complex            # d/dx K f + (2 sqrt(Q)/h - Q'/2Q) K f
    f: complex
    residual: float         # |lhs - f|
    relative: float         # residual / |f|


def _sqrt_near(Q, pts, ref):
    return aligned_sqrt(Q(pts), ref)


def kernel_apply(Q, x, sqrt_x, f, h, kind="plus", **grid_kw) -> complex:
    """``(K_+ f)(x, h) = sqrt(Q(x)) int_{-inf}^0 exp(2t/h) f(phi)/Q(phi) dt``."""
    gr = build_grid(Q, x, sqrt_x, h, kind, **grid_kw)
    fv, dfv = source_on(Q, gr.y, gr.sqrt_y, f)
    sq = sqrt_x if kind == "plus" else -sqrt_x
    return complex(sq * convolve(gr.tau, fv, dfv, h)[-1])


def verify_kernel_ode(Q: ComplexPolynomial, x, sqrt_x, f, h, delta=None, **grid_kw) -> KernelCheck:
    """Check ``(K f)' + (2 sqrt(Q)/h - Q'/(2Q)) K f = f`` at ``x``.

    ``K f`` is evaluated at ``x`` and its four complex-stencil neighbours
    (each on its own orbit) and differentiated numerically.
    """
    x = complex(x)
    fr = f if isinstance(f, RationalFunction) else RationalFunction(f)
    fx = complex(fr(x))
    if fr.is_zero():
        return KernelCheck(0j, 0j, 0j, 0.0, 0.0)
    if delta is None:
        delta = 0.02 * distance_scale(Q, x)
    pts = stencil_points(x, delta)
    sq_pts = _sqrt_near(Q, pts, sqrt_x)
    K0 = kernel_apply(Q, x, sqrt_x, fr, h, **grid_kw)
    Ks = np.array([kernel_apply(Q, p, s, fr, h, **grid_kw) for p, s in zip(pts, sq_pts)])
    d1, _ = stencil_derivatives(K0, Ks, delta)
    dQ = Q.derivative()
    lhs = d1 + (2.0 * sqrt_x / h - dQ(x) / (2.0 * Q(x))) * K0
    res = abs(lhs - fx)
    return KernelCheck(K0, complex(lhs), fx, float(res), float(res / abs(fx)))


def wdif_residual(Q: ComplexPolynomial, x, sqrt_x, h, delta=None, force=None, **it_kw) -> float:
    """Relative defect of ``W' + (2 sqrt(Q)/h - Q'/2Q) W + W^2 = C`` with ``W = sqrt(Q) g``."""
    force = forcing(Q) if force is None else force
    if delta is None:
        delta = 0.02 * distance_scale(Q, x)
    pts = np.concatenate([[complex(x)], stencil_points(x, delta)])
    sqs = _sqrt_near(Q, pts, sqrt_x)
    W = np.array([s * iterate(build_grid(Q, p, s, h, force=force), h, **it_kw).g
                  for p, s in zip(pts, sqs)])
    d1, _ = stencil_derivatives(W[0], W[1:], delta)
    dQ = Q.derivative()
    C = force.C(complex(x))
    lhs = d1 + (2.0 * sqrt_x / h - dQ(x) / (2.0 * Q(x))) * W[0] + W[0] ** 2
    return float(abs(lhs - C) / abs(C))

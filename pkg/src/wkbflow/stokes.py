"""Stokes curves, Stokes domains and the conformal coordinate ``S_a``.

Curves are traced with the real-time flow, which keeps ``Im S_a`` fixed.
Domains are connected components of a probe grid with the curves
removed.  On each domain the action, ``sqrt(Q)`` and ``Q**(1/4)`` are
continued cell by cell from the reference turning point, giving one
consistent branch for everything evaluated there.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .branch import BranchPoint, action, aligned_sqrt, gauss_kronrod, segment_integrals
from .errors import BranchError, ConfigError, FlowError, RegionError, UnsupportedGeometryError
from .flow import action_defect, advance, integrate
from .polynomial import ComplexPolynomial, TurningPoint, cached_turning_points, geometry_scale

INF = math.inf


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class StokesCurve:
    """A Stokes curve from ``source``; ``terminus`` is ``None`` for infinity.

    ``polyline`` starts at the source and stops short of the terminus.
    ``sqrt_values`` is the branch on which ``S_source`` is real and
    increasing along the curve.
    """

    curve_id: int
    source: TurningPoint
    direction_index: int
    polyline: np.ndarray = field(repr=False)
    sqrt_values: np.ndarray = field(repr=False)
    terminus: TurningPoint | None
    im_defect: float

    @property
    def end(self) -> complex:
        return complex(self.polyline[-1])

    def asymptotic_angle(self) -> float:
        return float(np.angle(self.polyline[-1]) % (2 * np.pi))

    def to_json(self):
        return {
            "id": self.curve_id,
            "source": [self.source.location.real, self.source.location.imag],
            "direction_index": self.direction_index,
            "terminus": "inf" if self.terminus is None else
            [self.terminus.location.real, self.terminus.location.imag],
            "points": len(self.polyline),
            "im_defect": self.im_defect,
        }


def seed_angles(Q: ComplexPolynomial, tp: TurningPoint) -> np.ndarray:
    """Directions ``theta_k`` along which ``c (x-a)^((r+2)/2)`` is real, ``k = 0..r+1``.

    ``c = 2 sqrt(q_r) / (r+2)`` with ``q_r`` the first nonzero Taylor
    coefficient of ``Q`` at the turning point.
    """
    r = tp.multiplicity
    q_r = Q.taylor_at(tp.location, r)[r]
    c = 2.0 * cmath.sqrt(q_r) / (r + 2)
    k = np.arange(r + 2)
    return (2.0 / (r + 2)) * (-cmath.phase(c) + np.pi * k)


def _project_seed(Q, tp, x, tps, clearance):
    """Move ``x`` onto ``Im S_a = 0`` by Newton steps; return point, sqrt, action."""
    for _ in range(8):
        av = action(Q, tp, x, turning_points=tps, clearance=clearance)
        sq = av.sqrt_end
        step = 1j * av.value.imag / sq
        x = x - step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    av = action(Q, tp, x, turning_points=tps, clearance=clearance)
    return x, av.sqrt_end, av.value


def trace_stokes_curves(Q: ComplexPolynomial, tp: TurningPoint, step: float | None = None,
                        R_max: float | None = None, clearance: float | None = None,
                        first_id: int = 0, eta: float = 0.02) -> list[StokesCurve]:
    """The ``r + 2`` Stokes curves emanating from ``tp``.

    Each curve is seeded a short distance from the turning point, projected
    onto ``Im S_a = 0``, and continued by the forward real-time flow on the
    branch where ``S_a`` is positive.  It ends at ``|x| >= R_max`` or on
    entering the clearance disc of another turning point.

    Parameters
    ----------
    step : float, optional
        Maximum spacing of polyline points (default ``0.05 * scale``).
    """
    tps = cached_turning_points(Q)
    scale = geometry_scale(tps)
    if R_max is None:
        R_max = 5.0 * scale
    if step is None:
        step = 0.05 * scale
    if clearance is None:
        clearance = 1e-3 * scale
    others = [abs(t.location - tp.location) for t in tps if t != tp]
    rho0 = 0.02 * (min(others) if others else scale)
    rho0 = max(rho0, 10 * clearance)
    curves = []
    for k, th in enumerate(seed_angles(Q, tp)):
        x0, sq0, s0 = _project_seed(Q, tp, tp.location + rho0 * cmath.exp(1j * th), tps, clearance)
        if s0.real < 0:
            sq0, s0 = -sq0, -s0
        traj = integrate(Q, x0, 1.0, 1e9, sqrt_x=sq0, eta=eta, clearance=clearance,
                         stop_radius=R_max, turning_points=tps)
        if traj.status not in ("radius", "clearance"):
            raise FlowError("Stokes curve stalled", source=tp.location, direction=k, status=traj.status)
        terminus = tps[traj.stop_index] if traj.status == "clearance" else None
        if terminus == tp:
            raise FlowError("Stokes curve returned to its source", source=tp.location, direction=k)
        defect = float(abs(s0.imag) + np.max(action_defect(traj)))
        # densify to the requested spacing with the orbit's Hermite interpolant
        gaps = np.abs(np.diff(traj.y))
        extra = np.maximum(np.ceil(gaps / step).astype(int), 1)
        ss = np.concatenate([np.linspace(traj.s[i], traj.s[i + 1], n, endpoint=False)
                             for i, n in enumerate(extra)] + [traj.s[-1:]])
        yy = traj.interpolate(ss)
        yy[0], yy[-1] = traj.y[0], traj.y[-1]
        sqs = aligned_sqrt(Q(yy), _nearest_sqrt(ss, traj))
        poly = np.concatenate([[tp.location], yy])
        sqv = np.concatenate([[0j], sqs])
        curves.append(StokesCurve(first_id + k, tp, k, poly, sqv, terminus, defect))
    return curves


def _nearest_sqrt(ss, traj):
    idx = np.clip(np.searchsorted(traj.s, ss, side="right") - 1, 0, len(traj.s) - 1)
    return traj.sqrt_y[idx]


def trace_all_curves(Q: ComplexPolynomial, R_max=None, step=None, clearance=None) -> list[StokesCurve]:
    curves = []
    for tp in cached_turning_points(Q):
        curves += trace_stokes_curves(Q, tp, step, R_max, clearance, first_id=len(curves))
    return curves


# ---------------------------------------------------------------------------
# probe grid and action fields


@dataclass(frozen=True)
class ProbeGrid:
    """Cell centres of a rectangle ``[xmin, xmax] x [ymin, ymax]``, indexed ``[iy, ix]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    @classmethod
    def around(cls, Q: ComplexPolynomial, half_width: float | None = None, n: int = 301) -> "ProbeGrid":
        tps = cached_turning_points(Q)
        c = complex(np.mean([tp.location for tp in tps]))
        L = 3.0 * geometry_scale(tps) if half_width is None else half_width
        return cls(c.real - L, c.real + L, c.imag - L, c.imag + L, n, n)

    @property
    def dx(self):
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def dy(self):
        return (self.ymax - self.ymin) / (self.ny - 1)

    @property
    def cell(self):
        return max(self.dx, self.dy)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @functools.cached_property
    def _points(self) -> np.ndarray:
        xs = np.linspace(self.xmin, self.xmax, self.nx)
        ys = np.linspace(self.ymin, self.ymax, self.ny)
        return xs[None, :] + 1j * ys[:, None]

    def points(self) -> np.ndarray:
        return self._points

    def index(self, z):
        z = np.asarray(z, dtype=complex)
        ix = np.rint((z.real - self.xmin) / self.dx).astype(int)
        iy = np.rint((z.imag - self.ymin) / self.dy).astype(int)
        return iy, ix

    def contains(self, z) -> bool:
        z = complex(z)
        return self.xmin <= z.real <= self.xmax and self.ymin <= z.imag <= self.ymax

    @property
    def half_diagonal(self):
        return 0.5 * math.hypot(self.xmax - self.xmin, self.ymax - self.ymin)


def _grid_graph(mask):
    ny, nx = mask.shape
    idx = -np.ones(mask.shape, dtype=np.int64)
    flat = np.flatnonzero(mask)
    idx.ravel()[flat] = np.arange(len(flat))
    rows, cols = [], []
    for dy, dx in ((0, 1), (1, 0)):
        a = idx[: ny - dy, : nx - dx]
        b = idx[dy:, dx:]
        ok = (a >= 0) & (b >= 0)
        rows += [a[ok], b[ok]]
        cols += [b[ok], a[ok]]
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    g = csr_matrix((np.ones(len(r)), (r, c)), shape=(len(flat), len(flat)))
    return g, flat


@dataclass
class ActionField:
    """Branch data continued over a set of grid cells.

    Arrays have the grid shape and are NaN outside ``mask``.  ``nearest``
    maps every grid cell to the flat index of the closest cell in
    ``mask``.
    """

    Q: ComplexPolynomial = field(repr=False)
    grid: ProbeGrid
    mask: np.ndarray = field(repr=False)
    sqrt: np.ndarray = field(repr=False)
    action: np.ndarray = field(repr=False)
    quarter: np.ndarray = field(repr=False)
    nearest: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, Q, grid: ProbeGrid, mask, root_index, root_sqrt, root_action, root_quarter):
        """Breadth-first continuation from the flat cell ``root_index``."""
        pts = grid.points()
        g, flat = _grid_graph(mask)
        pos = np.searchsorted(flat, root_index)
        order, pred = breadth_first_order(g, pos, directed=False, return_predecessors=True)
        n = len(flat)
        if len(order) != n:
            raise RegionError("cell set is not connected on the grid", cells=n, reached=len(order))
        depth = np.zeros(n, dtype=np.int64)
        for v in order[1:]:
            depth[v] = depth[pred[v]] + 1
        sq = np.zeros(n, dtype=complex)
        S = np.zeros(n, dtype=complex)
        q4 = np.zeros(n, dtype=complex)
        sq[pos], S[pos], q4[pos] = root_sqrt, root_action, root_quarter
        z = pts.ravel()[flat]
        by_depth = np.argsort(depth, kind="stable")
        bounds = np.searchsorted(depth[by_depth], np.arange(depth.max() + 2))
        for lvl in range(1, depth.max() + 1):
            v = by_depth[bounds[lvl]:bounds[lvl + 1]]
            p = pred[v]
            sq[v] = aligned_sqrt(Q(z[v]), sq[p])
            S[v] = S[p] + segment_integrals(Q, z[p], z[v], sq[p])
            q4[v] = aligned_sqrt(sq[v], q4[p])
        full = lambda vals: _scatter(mask.shape, flat, vals)
        _, inds = ndimage.distance_transform_edt(~mask, return_indices=True)
        nearest = np.ravel_multi_index((inds[0], inds[1]), mask.shape)
        return cls(Q, grid, mask, full(sq), full(S), full(q4), nearest)

    def flipped(self) -> "ActionField":
        return ActionField(self.Q, self.grid, self.mask, -self.sqrt, -self.action,
                           1j * self.quarter, self.nearest)

    def cell_of(self, x):
        iy, ix = self.grid.index(x)
        iy = int(np.clip(iy, 0, self.grid.ny - 1))
        ix = int(np.clip(ix, 0, self.grid.nx - 1))
        f = self.nearest[iy, ix]
        return np.unravel_index(f, self.mask.shape)

    def distance_to_cells(self, x) -> float:
        c = self.cell_of(x)
        return abs(complex(x) - complex(self.grid.points()[c]))

    def point(self, x) -> BranchPoint:
        """Continue from the nearest field cell to ``x`` along a straight segment."""
        x = complex(x)
        c = self.cell_of(x)
        z0 = complex(self.grid.points()[c])
        s0, S0, q0 = complex(self.sqrt[c]), complex(self.action[c]), complex(self.quarter[c])
        if x == z0:
            return BranchPoint(x, s0, S0, q0)
        d = x - z0
        Q = self.Q
        val, _ = gauss_kronrod(lambda s: aligned_sqrt(Q(z0 + d * s), s0) * d, tol=1e-14)
        sq = complex(aligned_sqrt(Q(x), s0))
        if (sq.real * s0.real + sq.imag * s0.imag) < 0.5 * abs(sq) * abs(s0):
            raise BranchError("branch ambiguous between grid cell and point", x=x, cell=z0)
        return BranchPoint(x, sq, S0 + val, complex(aligned_sqrt(sq, q0)))


def _scatter(shape, flat, vals):
    out = np.full(shape, np.nan + 0j, dtype=complex)
    out.ravel()[flat] = vals
    return out


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class RegionParams:
    delta: float = 0.05
    epsilon: float = 0.05

    def __post_init__(self):
        if not (self.delta > 0 and self.epsilon > 0):
            raise ConfigError("delta and epsilon must be positive", delta=self.delta, epsilon=self.epsilon)


@dataclass
class StokesDomain:
    """A classified Stokes domain with its branch of ``S_a`` (``Im S_a > 0`` inside)."""

    domain_id: int
    kind: str                       # "type1", "type2" or "unsupported"
    reference: TurningPoint
    secondary: TurningPoint | None
    mu: float
    boundary: list                  # curve-id groups
    anchor: complex
    label: int
    field: ActionField | None = field(repr=False, default=None)
    mu_sampled: float = float("nan")
    diagnostic: str = ""

    @property
    def Q(self):
        return self.field.Q

    def branch_point(self, x) -> BranchPoint:
        return self.field.point(x)

    def to_json(self):
        return {
            "id": self.domain_id,
            "type": self.kind,
            "mu": "inf" if self.mu == INF else self.mu,
            "mu_sampled": "inf" if self.mu_sampled == INF else self.mu_sampled,
            "reference": [self.reference.location.real, self.reference.location.imag],
            "secondary": None if self.secondary is None else
            [self.secondary.location.real, self.secondary.location.imag],
            "boundary_curves": self.boundary,
            "anchor": [self.anchor.real, self.anchor.imag],
            "diagnostic": self.diagnostic,
        }


@dataclass
class StokesGeometry:
    """Curves, grid labelling and domains of one ``Q``."""

    Q: ComplexPolynomial = field(repr=False)
    turning_points: tuple
    curves: list
    grid: ProbeGrid
    labels: np.ndarray = field(repr=False)
    curve_cells: list = field(repr=False)
    domains: list

    def domain_of(self, x) -> StokesDomain | None:
        iy, ix = self.grid.index(x)
        if not (0 <= iy < self.grid.ny and 0 <= ix < self.grid.nx):
            return None
        lab = self.labels[iy, ix]
        for d in self.domains:
            if d.label == lab:
                return d
        return None


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, i, j):
        self.p[self.find(i)] = self.find(j)


def rasterize(grid: ProbeGrid, points) -> np.ndarray:
    """Boolean grid mask of the cells visited by a polyline."""
    pts = np.asarray(points, dtype=complex)
    mask = np.zeros(grid.shape, dtype=bool)
    if len(pts) == 0:
        return mask
    samples = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        n = max(2, int(math.ceil(abs(q - p) / (0.25 * grid.cell))) + 1)
        samples.append(p + (q - p) * np.linspace(0, 1, n)[1:])
    z = np.concatenate(samples)
    iy, ix = grid.index(z)
    ok = (iy >= 0) & (iy < grid.ny) & (ix >= 0) & (ix < grid.nx)
    mask[iy[ok], ix[ok]] = True
    return mask


def _disc_mask(grid, centres, radius):
    pts = grid.points()
    m = np.zeros(grid.shape, dtype=bool)
    for c in centres:
        m |= np.abs(pts - c) <= radius
    return m


def _tp_index(tps, tp):
    return next(i for i, t in enumerate(tps) if t == tp)


def classify_domains(Q: ComplexPolynomial, curves, probe_grid: ProbeGrid, strict: bool = True,
                     min_cells: int = 20) -> StokesGeometry:
    """Label the components of the grid minus the curves and classify them.

    A component's boundary curves are grouped by shared turning points
    (a curve ending at a turning point joins the curves leaving it).  One
    group gives a type-1 domain (``mu = inf``), two groups a type-2 domain
    with ``mu = Im S_a(b)``.  More groups are outside the construction:
    :class:`UnsupportedGeometryError` if ``strict``, otherwise the domain is
    kept with ``kind == "unsupported"`` and a diagnostic.
    """
    grid = probe_grid
    tps = cached_turning_points(Q)
    cell = grid.cell
    disc = 2.5 * cell
    curve_cells = [rasterize(grid, list(c.polyline) + ([c.terminus.location] if c.terminus else []))
                   for c in curves]
    blocked = np.zeros(grid.shape, dtype=bool)
    for m in curve_cells:
        blocked |= m
    blocked = ndimage.binary_dilation(blocked, structure=np.ones((3, 3), bool))
    blocked |= _disc_mask(grid, [t.location for t in tps], disc)
    labels, nlab = ndimage.label(~blocked)
    sizes = ndimage.sum_labels(np.ones(grid.shape), labels, index=np.arange(1, nlab + 1))

    near_tp = _disc_mask(grid, [t.location for t in tps], 6 * cell)
    touch = [ndimage.binary_dilation(m, structure=np.ones((5, 5), bool)) & ~near_tp for m in curve_cells]

    pts = grid.points()
    domains = []
    for lab in range(1, nlab + 1):
        if sizes[lab - 1] < min_cells:
            continue
        comp = labels == lab
        adj = [k for k, t in enumerate(touch) if np.any(t & comp)]
        uf = _UnionFind(len(tps))
        for k in adj:
            c = curves[k]
            if c.terminus is not None:
                uf.union(_tp_index(tps, c.source), _tp_index(tps, c.terminus))
        groups = {}
        for k in adj:
            groups.setdefault(uf.find(_tp_index(tps, curves[k].source)), []).append(k)
        group_list = sorted(groups.values(), key=lambda g: (min(g)))
        dt = ndimage.distance_transform_edt(np.pad(comp, 1))[1:-1, 1:-1]
        anchor_idx = np.unravel_index(int(np.argmax(dt)), grid.shape)
        anchor = complex(pts[anchor_idx])
        dom_id = len(domains)
        if len(group_list) not in (1, 2):
            msg = f"component bounded by {len(group_list)} curve groups"
            if strict:
                raise UnsupportedGeometryError(msg, anchor=anchor, groups=len(group_list))
            ref = tps[0]
            domains.append(StokesDomain(dom_id, "unsupported", ref, None, float("nan"),
                                        group_list, anchor, lab, diagnostic=msg))
            continue
        ref = _reference(tps, curves, group_list[0])
        field_ = _domain_field(Q, grid, comp, ref, anchor_idx, tps)
        if len(group_list) == 1:
            mu = INF
            sec = None
            kind = "type1"
            mu_s = INF
        else:
            kind = "type2"
            sec = _reference(tps, curves, group_list[1])
            mu = _mu(Q, field_, sec, tps)
            if not mu > 0:
                raise RegionError("type-2 domain with nonpositive mu; refine the probe grid",
                                  anchor=anchor, mu=mu)
            mu_s = _mu_sampled(field_, comp, [curves[k] for k in group_list[1]])
        domains.append(StokesDomain(dom_id, kind, ref, sec, mu, group_list, anchor, lab,
                                    field_, mu_s))
    return StokesGeometry(Q, tps, list(curves), grid, labels, curve_cells, domains)


def _reference(tps, curves, group):
    counts = {}
    for k in group:
        i = _tp_index(tps, curves[k].source)
        counts[i] = counts.get(i, 0) + 1
    best = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return tps[best]


def _domain_field(Q, grid, comp, ref, anchor_idx, tps):
    pts = grid.points()
    cand = np.flatnonzero(comp)
    d = np.abs(pts.ravel()[cand] - ref.location)
    root = int(cand[np.argmin(d)])
    xe = complex(pts.ravel()[root])
    av = action(Q, ref, xe, turning_points=tps, clearance=0.5 * grid.cell)
    sq = av.sqrt_end
    fld = ActionField.build(Q, grid, comp, root, sq, av.value, cmath.sqrt(sq))
    if fld.action[anchor_idx].imag < 0:
        fld = fld.flipped()
    return fld


def _mu(Q, fld: ActionField, b: TurningPoint, tps) -> float:
    """``Im S_a(b) = Im (S_a(cell) - S_b(cell))`` from the field cell nearest ``b``."""
    c = fld.cell_of(b.location)
    z = complex(fld.grid.points()[c])
    sq = complex(fld.sqrt[c])
    av = action(Q, b, z, turning_points=tps, clearance=0.5 * fld.grid.cell)
    Sb = av.value if (av.sqrt_end * sq.conjugate()).real > 0 else -av.value
    return float((fld.action[c] - Sb).imag)


def _mu_sampled(fld: ActionField, comp, b_curves) -> float:
    """Sup of ``Im S_a`` over the domain cells and its sampled boundary (the closure)."""
    vals = [float(np.nanmax(fld.action.imag[comp]))]
    for c in b_curves:
        for p in c.polyline[1:]:
            if fld.grid.contains(p) and fld.distance_to_cells(p) <= 3 * fld.grid.cell:
                vals.append(fld.point(p).action.imag)
    return max(vals)


def analyze(Q: ComplexPolynomial, grid: ProbeGrid | None = None, strict: bool = True,
            step: float | None = None) -> StokesGeometry:
    """Turning points, all Stokes curves and the classified domains."""
    grid = ProbeGrid.around(Q) if grid is None else grid
    R = 1.05 * (grid.half_diagonal + abs(complex((grid.xmin + grid.xmax) / 2, (grid.ymin + grid.ymax) / 2)))
    curves = trace_all_curves(Q, R_max=R, step=step if step is not None else 0.5 * grid.cell)
    return classify_domains(Q, curves, grid, strict=strict)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class Membership:
    omega_delta: bool
    d_epsilon: bool
    action: complex


def in_region(domain: StokesDomain, params: RegionParams, x) -> Membership:
    """Membership of ``x`` in ``Omega_delta`` and in ``D_epsilon``.

    ``Omega_delta`` is decided from ``Im S_a`` continued from the nearest
    cell of the domain, which must be within two cells of ``x``.
    """
    x = complex(x)
    tps = cached_turning_points(domain.Q)
    d_eps = all(abs(x - t.location) > params.epsilon for t in tps)
    fld = domain.field
    if not fld.grid.contains(x) or fld.distance_to_cells(x) > 2.0 * fld.grid.cell:
        return Membership(False, d_eps, complex("nan"))
    try:
        bp = fld.point(x)
    except BranchError:
        return Membership(False, d_eps, complex("nan"))
    im = bp.action.imag
    inside = params.delta < im < domain.mu - params.delta
    return Membership(bool(inside), d_eps, bp.action)


def conformal_roundtrip(domain: StokesDomain, x, tol: float = 1e-7) -> float:
    """``|Psi(S_a(x)) - x|`` with ``Psi`` integrated from the domain anchor.

    ``Psi`` solves ``dPsi/dz = 1/sqrt(Q(Psi))`` along the straight segment
    from ``z* = S_a(anchor)`` to ``z = S_a(x)``; the segment stays in the
    half-plane or strip image because both are convex.

    Raises
    ------
    RegionError
        If ``S_a(x)`` is outside the image ``0 < Im z < mu``.
    """
    fld = domain.field
    bp = fld.point(x)
    z = bp.action
    if not (0.0 < z.imag < domain.mu):
        raise RegionError("point maps outside the domain image", x=complex(x), z=z, mu=domain.mu)
    a = fld.point(domain.anchor)
    psi = advance(domain.Q, a.x, z - a.action, sqrt_x=a.sqrt, rtol=min(1e-11, tol * 1e-3))
    return abs(psi - complex(x))


def sample_domain(domain: StokesDomain, n: int, rng: np.random.Generator, params: RegionParams | None = None,
                  subcell: bool = True) -> np.ndarray:
    """Random points of the domain: random cells, jittered within the cell.

    With ``params`` only points of ``Omega_delta`` inside ``D_epsilon`` are
    returned.
    """
    fld = domain.field
    grid = fld.grid
    flat = np.flatnonzero(fld.mask)
    pts = grid.points().ravel()
    out = []
    tries = 0
    while len(out) < n and tries < 50 * n:
        tries += 1
        z = complex(pts[rng.choice(flat)])
        if subcell:
            z += (rng.uniform(-0.5, 0.5) * grid.dx) + 1j * (rng.uniform(-0.5, 0.5) * grid.dy)
        if params is not None:
            m = in_region(domain, params, z)
            if not (m.omega_delta and m.d_epsilon):
                continue
        out.append(z)
    if len(out) < n:
        raise RegionError("could not sample enough points in the domain", wanted=n, got=len(out))
    return np.array(out)

"""Command line runner: configuration, pipeline stages and machine-readable output.

A run reads one JSON configuration, executes a single subcommand and
writes its data files plus ``report.json`` into the output directory.
Complex numbers are ``[re, im]`` pairs and infinity is the string
``"inf"`` everywhere, in input and output.

Exit status is 0 on success, 2 for configuration errors, 3 for numerical
failures and 4 for geometries outside the construction; on failure an
``error.json`` with the same payload is written and printed to stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, NumericalError, WKBError
from .flow import action_defect, group_defect, integrate
from .polynomial import ComplexPolynomial, cached_turning_points, geometry_scale
from .series import formal_residual_orders, forcing, riccati_coefficients
from .solver import catalan, iterate, verify_kernel_ode, build_grid
from .solutions import (OrbitCache, asymptotic_match, build_extension, build_solution, direct_ode_check,
                        extend_adjoining, g_ladder, relative_spread, remainder_slope,
                        residual, stable_arc_end, wronskian)
from .stokes import ProbeGrid, RegionParams, analyze, conformal_roundtrip, sample_domain

SUBCOMMANDS = ("turning-points", "stokes", "series", "iterate", "solve", "asymptotics", "extend", "verify")

# tolerances used by ``verify`` before ``--tol-scale`` is applied
TOLERANCES = {
    "turning_point_residual": 1e-10,
    "flow_action_identity": 1e-8,
    "flow_group_property": 1e-7,
    "stokes_curve_im_defect": 1e-8,
    "kernel_ode_identity": 1e-5,
    "solution_residual": 1e-5,
    "wronskian_spread": 1e-6,
    "conformal_roundtrip": 1e-7,
    "direct_ode_agreement": 1e-4,
}


# ---------------------------------------------------------------------------
# encoding


def encode(value):
    """JSON-ready form: complex as ``[re, im]``, infinities as ``"inf"``."""
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, (complex, np.complexfloating)):
        return [encode(value.real), encode(value.imag)]
    return value


def _decode_number(value, path):
    if isinstance(value, str):
        if value in ("inf", "-inf"):
            return float(value)
        raise ConfigError("expected a number", field=path, value=value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", field=path, value=value)
    return float(value)


def _decode_complex(value, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_decode_number(value[0], f"{path}[0]"), _decode_number(value[1], f"{path}[1]"))
    raise ConfigError("expected a complex number as [re, im]", field=path, value=value)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(encode(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _fmt(v):
    return repr(float(v))


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Validated run configuration.

    Evaluation points come from exactly one of ``points`` (explicit list),
    ``grid`` (rectangle with resolution) or ``sample`` (random points per
    Stokes domain, drawn with ``seed``).
    """

    Q: ComplexPolynomial
    base_sign: int = 1
    params: RegionParams = field(default_factory=RegionParams)
    h: list = field(default_factory=lambda: [0.1])
    points: list | None = None
    grid: dict | None = None
    sample: int = 3
    options: dict = field(default_factory=dict)
    out: str = "wkb_out"
    seed: int = 0
    tol_scale: float = 1.0
    dump_trajectories: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict, out=None, seed=None, tol_scale=None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object", field="")
        if "Q" not in data:
            raise ConfigError("missing polynomial coefficients", field="Q")
        qs = data["Q"]
        if not isinstance(qs, list) or not qs:
            raise ConfigError("Q must be a nonempty list of coefficients (constant term first)", field="Q")
        Q = ComplexPolynomial([_decode_complex(c, f"Q[{i}]") for i, c in enumerate(qs)])
        if Q.degree < 1:
            raise ConfigError("Q must have degree at least one", field="Q")
        sign = data.get("base_sign", 1)
        if sign not in (1, -1):
            raise ConfigError("base_sign must be 1 or -1", field="base_sign", value=sign)
        reg = data.get("region", {})
        if not isinstance(reg, dict):
            raise ConfigError("region must be an object", field="region")
        delta = _decode_number(reg.get("delta", 0.05), "region.delta")
        eps = _decode_number(reg.get("epsilon", 0.05), "region.epsilon")
        if not delta > 0:
            raise ConfigError("delta must be positive", field="region.delta", value=delta)
        if not eps > 0:
            raise ConfigError("epsilon must be positive", field="region.epsilon", value=eps)
        hs = data.get("h", [0.1])
        if not isinstance(hs, list):
            hs = [hs]
        hs = [_decode_number(v, f"h[{i}]") for i, v in enumerate(hs)]
        if not hs:
            raise ConfigError("h ladder is empty", field="h")
        for i, v in enumerate(hs):
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError("h values must be positive", field=f"h[{i}]", value=v)
        points = grid = None
        sample = 3
        ev = data.get("eval", {"sample": 3})
        if not isinstance(ev, dict) or len(ev) != 1:
            raise ConfigError("eval must hold exactly one of points, grid, sample", field="eval")
        if "points" in ev:
            if not isinstance(ev["points"], list) or not ev["points"]:
                raise ConfigError("point list is empty", field="eval.points")
            points = [_decode_complex(p, f"eval.points[{i}]") for i, p in enumerate(ev["points"])]
        elif "grid" in ev:
            g = ev["grid"]
            try:
                xmin, xmax, ymin, ymax = (_decode_number(v, f"eval.grid.rect[{i}]")
                                          for i, v in enumerate(g["rect"]))
                nx, ny = (int(v) for v in g["n"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("grid needs rect [xmin, xmax, ymin, ymax] and n [nx, ny]",
                                  field="eval.grid") from exc
            if nx < 1 or ny < 1 or not (xmax >= xmin and ymax >= ymin):
                raise ConfigError("grid is empty", field="eval.grid")
            grid = {"rect": [xmin, xmax, ymin, ymax], "n": [nx, ny]}
        elif "sample" in ev:
            sample = ev["sample"]
            if isinstance(sample, bool) or not isinstance(sample, int) or sample < 1:
                raise ConfigError("sample must be a positive integer", field="eval.sample", value=sample)
        else:
            raise ConfigError("eval must hold one of points, grid, sample", field="eval")
        options = data.get("options", {})
        if not isinstance(options, dict):
            raise ConfigError("options must be an object", field="options")
        seed = data.get("seed", 0) if seed is None else seed
        tol_scale = data.get("tol_scale", 1.0) if tol_scale is None else tol_scale
        tol_scale = _decode_number(tol_scale, "tol_scale")
        if not tol_scale > 0:
            raise ConfigError("tol_scale must be positive", field="tol_scale", value=tol_scale)
        return cls(Q, sign, RegionParams(delta, eps), hs, points, grid, sample, options,
                   out if out is not None else data.get("out", "wkb_out"), int(seed), tol_scale, data)

    def option(self, name, default):
        return self.options.get(name, default)

    def digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        extra = json.dumps([self.seed, self.tol_scale])
        return hashlib.sha256((canon + extra).encode()).hexdigest()

    def explicit_points(self) -> list[complex] | None:
        if self.points is not None:
            return list(self.points)
        if self.grid is not None:
            xmin, xmax, ymin, ymax = self.grid["rect"]
            nx, ny = self.grid["n"]
            xs = np.linspace(xmin, xmax, nx)
            ys = np.linspace(ymin, ymax, ny)
            return [complex(x, y) for y in ys for x in xs]
        return None


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


@dataclass
class RunReport:
    """Per-check results plus provenance; each check name appears once."""

    subcommand: str
    config_hash: str
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, name, passed, measured, tolerance, detail=""):
        if any(c.name == name for c in self.checks):
            raise ValueError(f"duplicate check {name}")
        self.checks.append(Check(name, bool(passed), float(measured), float(tolerance), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self):
        import scipy
        return {
            "subcommand": self.subcommand,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "measured": c.measured,
                        "tolerance": c.tolerance, "detail": c.detail} for c in self.checks],
            "files": sorted(self.files),
            "summary": self.summary,
            "provenance": {
                "config_hash": self.config_hash,
                "package": "wkbflow 0.1.0",
                "backend": kernels.BACKEND,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        }


# ---------------------------------------------------------------------------
# stages


class Runner:
    """Executes subcommands for one configuration and collects the report."""

    def __init__(self, config: RunConfig):
        self.cfg = config
        self.Q = config.Q
        self._geometry = None

    def geometry(self):
        if self._geometry is None:
            n = int(self.cfg.option("probe_n", 301))
            hw = self.cfg.option("probe_half_width", None)
            grid = ProbeGrid.around(self.Q, half_width=hw, n=n)
            self._geometry = analyze(self.Q, grid, strict=bool(self.cfg.option("strict", True)))
        return self._geometry

    def eval_points(self, params=None):
        """``(x, domain)`` pairs; explicit points outside every domain get ``None``."""
        geo = self.geometry()
        pts = self.cfg.explicit_points()
        if pts is not None:
            return [(x, geo.domain_of(x)) for x in pts]
        rng = np.random.default_rng(self.cfg.seed)
        out = []
        for d in geo.domains:
            if d.kind == "unsupported":
                continue
            for x in sample_domain(d, self.cfg.sample, rng, params or self._sampling_params()):
                out.append((complex(x), d))
        return out

    def _sampling_params(self):
        # keep verification points away from curves and turning points so
        # that residual stencils and short arcs stay in the domain
        scale = geometry_scale(cached_turning_points(self.Q))
        p = self.cfg.params
        return RegionParams(max(p.delta, 0.3), max(p.epsilon, 0.5 * scale))

    def path(self, name):
        return os.path.join(self.cfg.out, name)

    # -- subcommands ------------------------------------------------------

    def turning_points(self, report):
        tps = cached_turning_points(self.Q)
        data = [{"loc": t.location, "mult": t.multiplicity} for t in tps]
        dump_json(data, self.path("turning_points.json"))
        report.files.append("turning_points.json")
        report.summary["count"] = len(tps)
        return data

    def stokes(self, report):
        geo = self.geometry()
        os.makedirs(self.path("curves"), exist_ok=True)
        for c in geo.curves:
            name = f"curves/curve_{c.curve_id:03d}.csv"
            write_csv(self.path(name), ["re_x", "im_x", "re_sqrt", "im_sqrt"],
                      [(p.real, p.imag, s.real, s.imag) for p, s in zip(c.polyline, c.sqrt_values)])
            report.files.append(name)
        dump_json({"curves": [c.to_json() for c in geo.curves],
                   "domains": [d.to_json() for d in geo.domains],
                   "turning_points": [{"loc": t.location, "mult": t.multiplicity} for t in geo.turning_points]},
                  self.path("stokes.json"))
        report.files.append("stokes.json")
        report.summary["curves"] = len(geo.curves)
        report.summary["domains"] = len(geo.domains)
        return geo

    def series(self, report):
        N = int(self.cfg.option("N", 3))
        sign = self.cfg.base_sign
        coeffs = riccati_coefficients(self.Q, sign, N)
        force = forcing(self.Q)
        orders = formal_residual_orders(coeffs)
        rows = []
        pts = self.cfg.explicit_points() or []
        for x in pts:
            q = self.Q(x)
            if q == 0:
                continue
            sq = sign * complex(np.sqrt(complex(q)))
            rows.append([x.real, x.imag] + sum(([v.real, v.imag] for v in (s(x, sq) for s in coeffs)), []))
        if rows:
            header = ["re_x", "im_x"] + sum(([f"re_s{n}", f"im_s{n}"] for n in range(N + 1)), [])
            write_csv(self.path("series.csv"), header, rows)
            report.files.append("series.csv")
        dump_json({"s": [str(s) for s in coeffs], "s_exact": [s.to_json() for s in coeffs],
                   "C": str(force.C), "C_exact": force.C.to_json(),
                   "formal_residual_zero": [o.is_zero() for o in orders]},
                  self.path("series.json"))
        report.files.append("series.json")
        report.add("series_formal_residual", all(o.is_zero() for o in orders),
                   sum(not o.is_zero() for o in orders), 0)
        return coeffs

    def iterate(self, report):
        rows = []
        ok = True
        worst = 0.0
        N_max = int(self.cfg.option("N_max", 60))
        for x, d in self.eval_points():
            if d is None or d.kind == "unsupported":
                continue
            bp = d.field.point(x)
            for h in self.cfg.h:
                grid = build_grid(self.Q, x, bp.sqrt, h)
                st = iterate(grid, h, N_max=N_max, rtol=float(self.cfg.option("rtol", 1e-12)))
                ok &= st.bound_holds()
                for n, val, bound, ratio in st.table():
                    worst = max(worst, val / bound if bound > 0 else 0.0)
                    rows.append((x.real, x.imag, d.domain_id, h, n, val, bound, ratio))
        write_csv(self.path("iterate.csv"), ["re_x", "im_x", "domain", "h", "n", "abs_G", "bound", "ratio"], rows)
        report.files.append("iterate.csv")
        report.add("catalan_bound", ok, worst, 1.0, "max |G_n(0)| / bound")
        return rows

    def solve(self, report):
        rows = []
        params = self.cfg.params
        worst = 0.0
        for hi, h in enumerate(self.cfg.h):
            orbits = OrbitCache(h_max=h)
            for pi, (x, d) in enumerate(self.eval_points()):
                if d is None or d.kind == "unsupported":
                    rows.append((x.real, x.imag, -1, h, 0) + (math.nan,) * 6 + ("outside",))
                    continue
                for sign in (1, -1):
                    try:
                        sol = build_solution(d, sign, h, [x], params, orbits=orbits)
                        r = residual(sol, x)
                        dat = sol.data(x)
                        dU = sol.derivative(x)
                    except WKBError as exc:
                        rows.append((x.real, x.imag, d.domain_id, h, sign) + (math.nan,) * 6
                                    + (type(exc).__name__,))
                        continue
                    worst = max(worst, r.finite_difference, r.riccati)
                    if self.cfg.dump_trajectories:
                        self._dump_orbit(dat.state.grid.traj, f"point{pi:04d}_h{hi}_sign{sign:+d}.csv", report)
                    rows.append((x.real, x.imag, d.domain_id, h, sign, dat.U.real, dat.U.imag,
                                 dU.real, dU.imag, r.finite_difference, r.riccati, "ok"))
        write_csv(self.path("solution.csv"),
                  ["re_x", "im_x", "domain", "h", "sign", "re_U", "im_U", "re_dU", "im_dU",
                   "residual_fd", "residual_riccati", "status"], rows)
        report.files.append("solution.csv")
        tol = TOLERANCES["solution_residual"] * self.cfg.tol_scale
        report.add("solution_residual", worst <= tol, worst, tol)
        return rows

    def _dump_orbit(self, traj, name, report):
        rel = os.path.join("trajectories", name)
        os.makedirs(self.path("trajectories"), exist_ok=True)
        with open(self.path(rel), "w", newline="") as fh:
            traj.to_csv(fh)
        report.files.append(rel)

    def asymptotics(self, report):
        N = int(self.cfg.option("N", 3))
        hs = np.asarray(self.cfg.h if len(self.cfg.h) >= N + 4 else 0.05 * 0.75 ** np.arange(8))
        out = []
        for x, d in self.eval_points():
            if d is None or d.kind == "unsupported":
                continue
            gv = g_ladder(d, x, hs)
            rows = asymptotic_match(d, x, hs, N, g_values=gv)
            exact = [r.exact for r in rows]
            slopes = {n: remainder_slope(gv, hs, exact, n) for n in range(1, N)}
            out.append({"x": x, "domain": d.domain_id,
                        "rows": [{"n": r.n, "fitted": r.fitted, "exact": r.exact, "rel_error": r.rel_error}
                                 for r in rows],
                        "remainder_slopes": {str(k): v for k, v in slopes.items()}})
        dump_json({"h": hs, "points": out}, self.path("asymptotics.json"))
        report.files.append("asymptotics.json")
        return out

    def extend(self, report):
        geo = self.geometry()
        cid = self.cfg.option("curve", None)
        if cid is None:
            raise ConfigError("extend needs options.curve", field="options.curve")
        reg = build_extension(geo, int(cid), self.cfg.option("base_domain_label", None),
                              self.cfg.params.epsilon, self.cfg.params.delta)
        pts = self.cfg.explicit_points()
        if pts is None:
            raise ConfigError("extend needs explicit evaluation points", field="eval")
        h = self.cfg.h[0]
        rows = []
        worst = 0.0
        sol, _ = extend_adjoining(reg, h, [])
        for x in pts:
            inside, S = reg.classify(x)
            if not inside:
                rows.append((x.real, x.imag, S.real, S.imag, math.nan, math.nan, math.nan, math.nan, "rejected"))
                continue
            _, vals = extend_adjoining(reg, h, [x], orbits=sol.orbits)
            r = residual(sol, x)
            worst = max(worst, r.finite_difference)
            rows.append((x.real, x.imag, S.real, S.imag, vals[0].real, vals[0].imag,
                         r.finite_difference, r.riccati, "ok"))
        write_csv(self.path("extend.csv"), ["re_x", "im_x", "re_S", "im_S", "re_U", "im_U",
                                            "residual_fd", "residual_riccati", "status"], rows)
        report.files.append("extend.csv")
        report.summary.update({"side": reg.side, "base": reg.base.domain_id, "other": reg.other.domain_id})
        tol = TOLERANCES["solution_residual"] * self.cfg.tol_scale
        report.add("extension_residual", worst <= tol, worst, tol)
        return rows

    def verify(self, report):
        """Every module invariant on the configured ``Q`` at the first ``h``."""
        ts = self.cfg.tol_scale
        tol = {k: v * ts for k, v in TOLERANCES.items()}
        Q = self.Q
        h = self.cfg.h[0]
        tps = cached_turning_points(Q)
        scale = geometry_scale(tps)

        res = max(abs(Q(t.location)) / max(1.0, float(np.sum(np.abs(Q.coefficients)) * max(1.0, abs(t.location))
                                                        ** Q.degree)) for t in tps)
        report.add("turning_point_residual", res <= tol["turning_point_residual"], res,
                   tol["turning_point_residual"])
        report.add("turning_point_multiplicity", sum(t.multiplicity for t in tps) == Q.degree,
                   sum(t.multiplicity for t in tps), Q.degree)

        geo = self.geometry()
        expected = sum(t.multiplicity + 2 for t in tps)
        report.add("stokes_curve_count", len(geo.curves) == expected, len(geo.curves), expected)
        imd = max(c.im_defect for c in geo.curves)
        report.add("stokes_curve_im_defect", imd <= tol["stokes_curve_im_defect"], imd,
                   tol["stokes_curve_im_defect"])

        orders = formal_residual_orders(riccati_coefficients(Q, 1, 3))
        report.add("series_formal_residual", all(o.is_zero() for o in orders),
                   sum(not o.is_zero() for o in orders), 0)
        # M_1 .. M_12 of the majorant recursion are the Catalan numbers C_0 .. C_11
        cat = catalan(12)
        ref = [math.comb(2 * k, k) // (k + 1) for k in range(12)]
        report.add("catalan_numbers", cat == ref, sum(a != b for a, b in zip(cat, ref)), 0)

        pts = self.eval_points()
        t_flow = float(self.cfg.option("t_flow", 20.0))
        flow_err = group_err = kern = res_w = conf = ode = spread = 0.0
        bound_ok = agree_ok = True
        orbits = OrbitCache(h_max=h)
        by_domain = {}
        for x, d in pts:
            if d is None or d.kind == "unsupported":
                raise ConfigError("verification point outside every supported domain", field="eval",
                                  x=x)
            bp = d.field.point(x)
            traj = integrate(Q, x, -1.0, t_flow, sqrt_x=bp.sqrt, eta=0.02)
            flow_err = max(flow_err, float(np.max(action_defect(traj))))
            group_err = max(group_err, _group(Q, x, bp.sqrt, t_flow))
            kern = max(kern, verify_kernel_ode(Q, x, bp.sqrt, 1, h).relative)
            sp = build_solution(d, 1, h, [x], self.cfg.params, orbits=orbits)
            sm = build_solution(d, -1, h, [x], self.cfg.params, orbits=orbits)
            for sol in (sp, sm):
                r = residual(sol, x)
                res_w = max(res_w, r.finite_difference, r.riccati)
                agree_ok &= r.agree()
                bound_ok &= sol.data(x).state.bound_holds()
            by_domain.setdefault(d.domain_id, []).append((x, sp, sm))
            conf = max(conf, conformal_roundtrip(d, x))
            for sol in (sp, sm):
                ode = max(ode, direct_ode_check(sol, x, stable_arc_end(sol, x, 0.1 * scale), n=4))
        for items in by_domain.values():
            if len(items) > 1:
                w = np.concatenate([wronskian(sp, sm, [x]) for x, sp, sm in items])
                spread = max(spread, relative_spread(w))

        report.add("flow_action_identity", flow_err <= tol["flow_action_identity"], flow_err,
                   tol["flow_action_identity"])
        report.add("flow_group_property", group_err <= tol["flow_group_property"], group_err,
                   tol["flow_group_property"])
        report.add("catalan_bound", bound_ok, float(not bound_ok), 0)
        report.add("kernel_ode_identity", kern <= tol["kernel_ode_identity"], kern, tol["kernel_ode_identity"])
        report.add("solution_residual", res_w <= tol["solution_residual"], res_w, tol["solution_residual"])
        report.add("residual_routes_agree", agree_ok, float(not agree_ok), 0)
        report.add("wronskian_spread", spread <= tol["wronskian_spread"], spread, tol["wronskian_spread"])
        report.add("conformal_roundtrip", conf <= tol["conformal_roundtrip"], conf, tol["conformal_roundtrip"])
        report.add("direct_ode_agreement", ode <= tol["direct_ode_agreement"], ode, tol["direct_ode_agreement"])
        write_csv(self.path("verify_points.csv"), ["re_x", "im_x", "domain"],
                  [(x.real, x.imag, d.domain_id) for x, d in pts])
        report.files.append("verify_points.csv")
        return report


def _group(Q, x, sqrt_x, t_flow):
    """Group property along real backward times (orbits stay in the domain)."""
    return group_defect(Q, x, -0.4 * t_flow, -0.6 * t_flow, sqrt_x=sqrt_x)


def run(subcommand: str, config: RunConfig) -> RunReport:
    """Execute one subcommand, write its files and ``report.json``."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError("unknown subcommand", field="subcommand", value=subcommand)
    os.makedirs(config.out, exist_ok=True)
    runner = Runner(config)
    report = RunReport(subcommand, config.digest())
    getattr(runner, subcommand.replace("-", "_"))(report)
    report.files.append("report.json")
    dump_json(report.to_json(), os.path.join(config.out, "report.json"))
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wkbflow", description="Exact WKB solutions for polynomial potentials.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", default=None, help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, default=None, help="seed for random evaluation points")
    p.add_argument("--tol-scale", type=float, default=None, help="multiply every verification tolerance")
    p.add_argument("--dump-trajectories", action="store_true",
                   help="debug: write the flow orbit behind every solution value to trajectories/*.csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}", field="--config") from exc
        cfg = RunConfig.from_dict(data, out=args.out, seed=args.seed, tol_scale=args.tol_scale)
        cfg.dump_trajectories = args.dump_trajectories
        out = cfg.out
        report = run(args.subcommand, cfg)
    except WKBError as exc:
        return _fail(exc.to_dict(), out)
    except (ArithmeticError, ValueError) as exc:
        return _fail(NumericalError(str(exc), kind=type(exc).__name__).to_dict(), out)
    print(json.dumps({"subcommand": args.subcommand, "passed": report.passed, "out": cfg.out}, sort_keys=True))
    return 0


def _fail(payload, out) -> int:
    text = json.dumps(encode(payload), sort_keys=True)
    if out:
        try:
            os.makedirs(out, exist_ok=True)
            with open(os.path.join(out, "error.json"), "w") as fh:
                fh.write(text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)
    return payload["exit_code"]

"""Scherk-type fundamental pieces over a segment and a concave arc.

Frame: the segment alpha runs from p1 = (0, 0) to p2 = (L, 0) in the slice
z = 0, the arc gamma is y = g(x) >= 0 over it, and the Killing field is d/dy.
The graph u_c solves Q(u) = 0 on the region between them, with u = 0 on
gamma and u = f_c(x) on alpha. The same surface is the Killing graph
y = g_c(x, z) over {0 <= z <= f_c(x)}, with g on z = 0 and 0 elsewhere.

The solve runs in that Killing chart: its data are continuous, whereas u_c
jumps at the corners and develops a layer of width ~exp(-c) along alpha
that a uniform grid does not resolve. u_c is recovered by inverting the
columns of g_c, which must be strictly decreasing in z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, SingleCrossingViolation, SolverBreakdown
from .estimates import ScherkProfile, scherk_profile
from .grid import INTERIOR, GridFunction, TriangleDelta, build_grid
from .lie_algebra import GroupMatrix, rotate_congruence, rotation
from .mc_operator import KillingGraphSystem, W_of_jet, discrete_jet, interior_index
from .pde_solver import DEFAULT_MAX_ITER, DEFAULT_TOL, DirichletProblem, SolverReport, newton

CONCAVITY_TOL = 1e-10


@dataclass(frozen=True)
class GammaSpec:
    """Arc y = g(x) over [0, L]: g(0) = g(L) = 0, g > 0 inside, concave, transverse at both ends."""

    L: float
    g: Callable
    name: str = "custom"
    samples: int = 2001

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        L = self.L
        if not L > 0:
            raise DomainError("segment length must be positive")
        xs = np.linspace(0.0, L, self.samples)
        gs = np.asarray(self.g(xs), dtype=float)
        if abs(gs[0]) > 1e-12 or abs(gs[-1]) > 1e-12:
            raise DomainError("gamma must meet alpha at both endpoints")
        if np.any(gs[1:-1] <= 0):
            raise DomainError("gamma must lie strictly on one side of alpha")
        if np.max(np.diff(gs, 2)) > CONCAVITY_TOL:
            raise DomainError("gamma must bound a convex region with alpha (g concave)")
        s0, s1 = self.end_slopes()
        if not (s0 > 0 and s1 < 0 and math.isfinite(s0) and math.isfinite(s1)):
            raise DomainError("gamma must meet alpha at angles in (0, pi/2)")

    def end_slopes(self) -> tuple[float, float]:
        d = self.L * 1e-7
        g = self.g
        return float((g(d) - g(0.0)) / d), float((g(self.L) - g(self.L - d)) / d)

    @property
    def corner_angles(self) -> tuple[float, float]:
        """One-sided angles between gamma and alpha at p1 and p2."""
        s0, s1 = self.end_slopes()
        return math.atan(s0), math.atan(-s1)

    def to_dict(self) -> dict:
        return {"L": self.L, "name": self.name, "corner_angles": list(self.corner_angles)}


def smoothed_tent(L: float, height: float = 0.4, smoothing: float = 0.05) -> GammaSpec:
    """height * min(x, L - x) with the apex rounded over a width ~ smoothing * L."""
    eps = smoothing * L

    def s(t):
        return np.sqrt(np.asarray(t, dtype=float) ** 2 + eps * eps)

    def g(x):
        return height * (s(0.5 * L) - s(np.asarray(x, dtype=float) - 0.5 * L))

    return GammaSpec(L, g, name=f"smoothed_tent(height={height}, smoothing={smoothing})")


@dataclass(frozen=True)
class RigidMotion:
    """q -> R(-theta) (q - p1) on the slice z = 0, heights unchanged."""

    theta: float
    p1: tuple[float, float]

    def apply(self, p):
        p = np.asarray(p, dtype=float)
        q = rotation(-self.theta) @ (p[:2] - np.asarray(self.p1))
        return np.concatenate([q, p[2:]])

    def inverse(self, p):
        p = np.asarray(p, dtype=float)
        q = rotation(self.theta) @ p[:2] + np.asarray(self.p1)
        return np.concatenate([q, p[2:]])


def normalize_frame(A: GroupMatrix, p1, p2) -> tuple[GroupMatrix, RigidMotion, float]:
    """Matrix and motion putting p1 at the origin and p2 at (L, 0, 0)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if len(p1) > 2 and (p1[2] != 0 or p2[2] != 0):
        raise DomainError("endpoints must lie in the slice z = 0")
    d = p2[:2] - p1[:2]
    L = float(np.hypot(*d))
    if L == 0:
        raise DomainError("endpoints coincide")
    theta = math.atan2(d[1], d[0])
    motion = RigidMotion(theta, (float(p1[0]), float(p1[1])))
    An = A if theta == 0.0 else rotate_congruence(A, -theta)
    return An, motion, L


@dataclass
class KillingGraph:
    """Samples of g_c(x, z) on columns x and levels z (NaN above f_c(x))."""

    c: float
    x: np.ndarray
    z: np.ndarray
    values: np.ndarray
    monotone: np.ndarray

    def at(self, xsel, zsel) -> np.ndarray:
        return self.values[np.ix_(xsel, zsel)]


@dataclass
class ScherkRun:
    A: GroupMatrix
    gamma: GammaSpec
    profile: ScherkProfile
    c_schedule: list
    h: float
    hz: float | None = None
    K: tuple = (0.1, 0.9, 0.0, 2.0)  # x-range as fractions of L, then the z-range
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    threads: int = 1
    motion: RigidMotion | None = None
    solutions: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    killing_graphs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hz is None:
            self.hz = self.h

    @property
    def L(self) -> float:
        return self.gamma.L

    def domain(self) -> TriangleDelta:
        return TriangleDelta(self.L, self.gamma.g)

    def f_c(self, c: float):
        return self.profile.with_level(c).fc


def make_run(A: GroupMatrix, gamma: GammaSpec, c_schedule, h: float, **kw) -> ScherkRun:
    """Checks the schedule and the profile precondition (L < L0 for positive trace)."""
    cs = [float(c) for c in c_schedule]
    if any(b <= a for a, b in zip(cs, cs[1:])) or (cs and cs[0] < 0):
        raise DomainError("c schedule must be nonnegative and increasing")
    profile = scherk_profile(A, gamma.L, 0.0)
    return ScherkRun(A, gamma, profile, cs, h, **kw)


def scherk_grid(run: ScherkRun) -> GridFunction:
    """Mask over the region with alpha on the row y = 0."""
    g = build_grid(run.domain(), run.h, origin=(-run.h, -run.h))
    g.check()
    return g


def boundary_values(run: ScherkRun, grid: GridFunction, c: float) -> np.ndarray:
    """f_c on alpha, 0 elsewhere; the corner nodes x = 0 and x = L take the gamma-side value 0."""
    X, Y = grid.coords()
    b = grid.boundary
    vals = np.zeros(int(b.sum()))
    bx, by = X[b], Y[b]
    on_alpha = (np.abs(by) < 1e-12 * run.h) & (bx > 0) & (bx < run.L)
    vals[on_alpha] = run.f_c(c)(bx[on_alpha])
    return vals


def build_gamma_c_problem(run: ScherkRun, c: float, prior: tuple[float, GridFunction] | None = None) -> DirichletProblem:
    """The Gamma_c problem as a pi-graph over the region: u = 0 on gamma, f_c on alpha."""
    grid = scherk_grid(run)
    grid.values[grid.boundary] = boundary_values(run, grid, c)
    fc = run.f_c(c)
    gfun = run.gamma.g
    if prior is None:
        def guess(x, y):
            return fc(x) * np.clip(1.0 - y / gfun(x), 0.0, 1.0)
    else:
        c0, u0 = prior
        I, J = interior_index(grid)
        X, Y = grid.coords()
        x, y = X[I, J], Y[I, J]
        start = grid.copy()
        start.values[I, J] = u0.values[I, J] + (fc(x) - run.f_c(c0)(x)) * np.clip(1.0 - y / gfun(x), 0.0, 1.0)
        guess = start
    return DirichletProblem(run.A, run.domain(), run.h, grid=grid, initial_guess=guess)


def solve_gamma_c_pi(run: ScherkRun, c: float, prior=None) -> tuple[GridFunction, SolverReport]:
    """Direct pi-graph solve; only reliable while the layer at alpha is resolved (small c)."""
    p = build_gamma_c_problem(run, c, prior)
    u0 = p.start(p.discretize())
    return newton(run.A, u0, None, run.tol, run.max_iter, run.threads)


# --- the Killing chart -------------------------------------------------------

def killing_grid(run: ScherkRun, c: float) -> GridFunction:
    """Mask over {0 < x < L, 0 < z < f_c(x)} sharing the x-nodes of the pi-graph grid."""
    dom = TriangleDelta(run.L, run.f_c(c))
    g = build_grid(dom, run.h, run.hz, origin=(-run.h, -run.hz))
    g.check()
    X, Z = g.coords()
    b = g.boundary
    vals = np.zeros(int(b.sum()))
    bottom = (np.abs(Z[b]) < 1e-12 * run.hz) & (X[b] > 0) & (X[b] < run.L)
    vals[bottom] = run.gamma.g(X[b][bottom])
    g.values[b] = vals
    return g


def solve_killing(run: ScherkRun, c: float, prior: tuple[float, GridFunction] | None = None):
    """Minimal Killing graph y = g_c(x, z) with g on z = 0 and 0 on the rest of the boundary."""
    grid = killing_grid(run, c)
    I, J = interior_index(grid)
    X, Z = grid.coords()
    x, z = X[I, J], Z[I, J]
    if prior is None:
        grid.values[I, J] = run.gamma.g(x) * np.clip(1.0 - z / run.f_c(c)(x), 0.0, 1.0)
    else:
        old = prior[1]
        nx, ny = min(old.nx, grid.nx), min(old.ny, grid.ny)
        start = np.zeros(grid.values.shape)
        common = old.values[:nx, :ny]
        start[:nx, :ny] = np.where(np.isfinite(common), common, 0.0)
        grid.values[I, J] = start[I, J]
    g, rep = newton(KillingGraphSystem(run.A), grid, None, run.tol, run.max_iter, run.threads)
    g.meta.update({"A": run.A.to_dict(), "c": c, "chart": "killing"})
    return g, rep


def resolution_floor(run: ScherkRun) -> float:
    """Values of g_c below tol * max g are not resolved by the Newton stopping rule."""
    xs = np.linspace(0.0, run.L, 201)
    return run.tol * float(np.max(run.gamma.g(xs)))


def column_decreasing(v: np.ndarray, floor: float) -> bool:
    """Strictly decreasing while above the floor, never increasing below it."""
    d = np.diff(v)
    return bool(np.all((d < 0) | ((v[1:] <= floor) & (d <= 0))))


def killing_columns_monotone(gk: GridFunction, run: ScherkRun, c: float) -> np.ndarray:
    """Per interior column: g_c decreasing in z (the surface is a pi-graph there)."""
    floor = resolution_floor(run)
    out = []
    for i in _killing_cols(gk, run):
        z, v = _killing_column(gk, i, run, c)
        out.append(column_decreasing(v, floor))
    return np.array(out, dtype=bool)


def _killing_cols(gk: GridFunction, run: ScherkRun):
    return [i for i in range(gk.nx) if 0 < gk.x[i] < run.L and np.any(gk.mask[i] == INTERIOR)]


def _killing_column(gk: GridFunction, i: int, run: ScherkRun, c: float):
    x = gk.x[i]
    top = float(run.f_c(c)(x))
    zs = gk.y
    sel = (gk.mask[i] == INTERIOR) & (zs > 0) & (zs < top)
    z = np.concatenate([[0.0], zs[sel], [top]])
    v = np.concatenate([[float(run.gamma.g(x))], gk.values[i, sel], [0.0]])
    return z, v


def pi_graph_from_killing(gk: GridFunction, run: ScherkRun, c: float) -> GridFunction:
    """u_c on the pi-graph grid: the height z with g_c(x, z) = y, column by column."""
    u = scherk_grid(run)
    u.values[u.boundary] = boundary_values(run, u, c)
    I, J = interior_index(u)
    floor = resolution_floor(run)
    for i in np.unique(I):
        z, v = _killing_column(gk, i, run, c)
        if not column_decreasing(v, floor):
            raise SingleCrossingViolation(f"g_c is not monotone in z at x = {gk.x[i]:.6g}")
        keep = np.concatenate([v[:-1] > floor, [True]])
        rows = J[I == i]
        u.values[i, rows] = np.interp(u.y[rows], v[keep][::-1], z[keep][::-1])
    u.meta.update({"A": run.A.to_dict(), "c": c, "gamma": run.gamma.to_dict(), "chart": "from_killing"})
    return u


def solve_gamma_c(run: ScherkRun, c: float, prior=None):
    """Solve the Gamma_c problem in the Killing chart; returns (u_c, g_c, report)."""
    gk, rep = solve_killing(run, c, prior)
    u = pi_graph_from_killing(gk, run, c) if rep.converged else None
    return u, gk, rep


def _column_profile(u: GridFunction, i: int, run: ScherkRun, c: float):
    """(y, u) along column i from alpha (y = 0) to gamma (y = g(x))."""
    x = u.x[i]
    gx = float(run.gamma.g(x))
    ys = u.y
    sel = (u.mask[i] == INTERIOR) & (ys > 0) & (ys < gx)
    y = np.concatenate([[0.0], ys[sel], [gx]])
    v = np.concatenate([[float(run.f_c(c)(x))], u.values[i, sel], [0.0]])
    return y, v


def extract_killing_graph(u: GridFunction, run: ScherkRun, c: float, z_levels=None, strict: bool = True) -> KillingGraph:
    """Invert each column: g_c(x, z) is the y where u_c(x, y) = z (linear interpolation).

    Columns must be strictly decreasing from f_c(x) on alpha to 0 on gamma;
    otherwise SingleCrossingViolation (or a False flag when strict=False).
    """
    cols = [i for i in range(u.nx) if 0 < u.x[i] < run.L and np.any(u.mask[i] == INTERIOR)]
    if z_levels is None:
        top = float(np.max(run.f_c(c)(u.x[cols])))
        z_levels = np.arange(0.0, top + 0.5 * run.hz, run.hz)
    z = np.asarray(z_levels, dtype=float)
    vals = np.full((len(cols), len(z)), np.nan)
    mono = np.ones(len(cols), dtype=bool)
    for k, i in enumerate(cols):
        y, v = _column_profile(u, i, run, c)
        if not np.all(np.diff(v) < 0):
            mono[k] = False
            if strict:
                raise SingleCrossingViolation(f"column x = {u.x[i]:.6g} is not strictly monotone")
            continue
        ok = z <= v[0]
        vals[k, ok] = np.interp(z[ok], v[::-1], y[::-1])
    return KillingGraph(c, u.x[cols], z, vals, mono)


def _solve_with_refinement(run: ScherkRun, c: float, prior):
    """Warm-started solve, splitting the step in c when Newton fails."""
    if prior is None:
        return solve_killing(run, c)
    c_prev = prior[0]
    last = None
    for pieces in (1, 2, 4, 8, 16):
        state, ok = prior, True
        for s in range(1, pieces + 1):
            cc = c_prev + (c - c_prev) * s / pieces
            try:
                gk, rep = solve_killing(run, cc, state)
            except SolverBreakdown as exc:
                last, ok = exc, False
                break
            if not rep.converged:
                last, ok = rep, False
                break
            state = (cc, gk)
        if ok:
            return gk, rep
    if isinstance(last, SolverBreakdown):
        raise last
    return gk, rep


def _kg_from_grid(gk: GridFunction, run: ScherkRun, c: float) -> KillingGraph:
    cols = _killing_cols(gk, run)
    vals = np.where(gk.active, gk.values, np.nan)[cols]
    return KillingGraph(c, gk.x[cols], gk.y.copy(), vals, killing_columns_monotone(gk, run, c))


def run_continuation(run: ScherkRun) -> ScherkRun:
    """Solve along the c schedule and record sandwich, monotonicity and Cauchy-decay diagnostics."""
    prior = None
    diag = {"per_c": {}, "failures": []}
    slacks = {}
    for c in run.c_schedule:
        try:
            gk, rep = _solve_with_refinement(run, c, prior)
        except SolverBreakdown as exc:
            diag["failures"].append({"c": c, "error": str(exc)})
            continue
        run.reports[c] = rep
        if not rep.converged:
            diag["failures"].append({"c": c, "error": rep.message})
            continue
        prior = (c, gk)
        kg = _kg_from_grid(gk, run, c)
        run.killing_graphs[c] = kg
        slacks[c] = gk.difference_slack()
        entry = {
            "converged": rep.converged,
            "iterations": rep.iterations,
            "residual": rep.final_residual_sup,
            "grid_slack": slacks[c],
            "non_monotone_columns": int((~kg.monotone).sum()),
        }
        gx = np.asarray(run.gamma.g(kg.x))[:, None]
        inner = np.isfinite(kg.values)
        entry["g_outside_sandwich"] = int(np.sum(inner & ((kg.values < 0) | (kg.values > gx))))
        if kg.monotone.all():
            u = pi_graph_from_killing(gk, run, c)
            run.solutions[c] = u
            back = extract_killing_graph(u, run, c, strict=False)
            X, _ = u.coords()
            act = u.active
            vals = u.values[act]
            entry.update({
                "pi_columns_non_monotone": int((~back.monotone).sum()),
                "u_below_zero": int(np.sum(vals < 0)),
                "u_above_fc": int(np.sum(vals > run.f_c(c)(X[act]))),
                "u_centroid": _centroid_value(u, run),
            })
        diag["per_c"][c] = entry
    cs = sorted(run.killing_graphs)
    mono, diffs = [], {}
    for a, b in zip(cs, cs[1:]):
        ka, kb = run.killing_graphs[a], run.killing_graphs[b]
        nz = min(len(ka.z), len(kb.z))
        ga, gb = ka.values[:, :nz], kb.values[:, :nz]
        both = np.isfinite(ga) & np.isfinite(gb)
        slack = max(slacks[a], slacks[b])
        drop = float(np.max((ga - gb)[both], initial=0.0))
        mono.append({"c": a, "c_next": b, "max_drop": drop, "grid_slack": slack, "ok": drop < slack})
        x0, x1, z0, z1 = run.K
        xs = (ka.x >= x0 * run.L) & (ka.x <= x1 * run.L)
        zs = (ka.z[:nz] >= z0) & (ka.z[:nz] <= z1)
        sa, sb = ga[np.ix_(xs, zs)], gb[np.ix_(xs, zs)]
        if np.all(np.isfinite(sa) & np.isfinite(sb)):
            diffs[(a, b)] = float(np.max(np.abs(sb - sa)))
    diag["monotonicity"] = mono
    diag["cauchy"] = [{"c": a, "c_next": b, "sup_K": d} for (a, b), d in diffs.items()]
    ds = list(diffs.values())
    diag["cauchy_ratios"] = [ds[i + 1] / ds[i] for i in range(len(ds) - 1) if ds[i] > 0]
    if ds:
        diag["g_infinity_estimate"] = {"c": cs[-1], "error_estimate": ds[-1]}
    run.diagnostics = diag
    return run


def _centroid_value(u: GridFunction, run: ScherkRun) -> float:
    xs = np.linspace(0, run.L, 401)
    gs = np.asarray(run.gamma.g(xs))
    area = trapezoid(gs, xs)
    cx = trapezoid(xs * gs, xs) / area
    cy = trapezoid(0.5 * gs * gs, xs) / area
    i = int(np.argmin(np.abs(u.x - cx)))
    j = int(np.argmin(np.abs(u.y - cy)))
    return float(u.values[i, j])


@dataclass
class VerticalityReport:
    min_inv_W: float
    argmin: tuple[float, float]
    near_vertical: int
    threshold: float
    distance_to_alpha: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def nowhere_vertical_check(u: GridFunction, A: GroupMatrix, threshold: float = 1e-3) -> VerticalityReport:
    """Vertical component 1/W of the unit normal at interior nodes."""
    I, J = interior_index(u)
    jet = discrete_jet(u, I, J)
    inv = 1.0 / W_of_jet(A, jet)
    k = int(np.argmin(inv))
    x, y = float(u.x[I[k]]), float(u.y[J[k]])
    return VerticalityReport(float(inv[k]), (x, y), int(np.sum(inv < threshold)), threshold, abs(y))


@dataclass
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray
    lines: dict
    header: dict
    node_index: np.ndarray

    def grid_values(self, shape) -> np.ndarray:
        """Heights back on the grid (NaN at nodes without a vertex)."""
        out = np.full(shape, np.nan)
        sel = self.node_index >= 0
        out[sel] = self.vertices[self.node_index[sel], 2]
        return out


def export_fundamental_piece(run: ScherkRun, c: float) -> Mesh:
    """Triangulated graph over the active grid with gamma, alpha_c and the corner jumps as polylines."""
    u = run.solutions[c]
    X, Y = u.coords()
    act = u.active
    idx = -np.ones(act.shape, dtype=np.int64)
    idx[act] = np.arange(int(act.sum()))
    verts = np.column_stack([X[act], Y[act], u.values[act]])
    a, b = idx[:-1, :-1], idx[1:, :-1]
    d, e = idx[:-1, 1:], idx[1:, 1:]
    full = (a >= 0) & (b >= 0) & (d >= 0) & (e >= 0)
    faces = np.concatenate([
        np.column_stack([a[full], b[full], e[full]]),
        np.column_stack([a[full], e[full], d[full]]),
    ])
    bnd = u.boundary
    row0 = np.abs(Y) < 1e-12 * run.h
    alpha_nodes = bnd & row0 & (X > 0) & (X < run.L)
    ai = np.nonzero(alpha_nodes)
    order = np.argsort(X[ai])
    alpha_line = idx[ai][order]
    gam = bnd & ~alpha_nodes
    gi = np.nonzero(gam)
    cx, cy = 0.5 * run.L, 0.0
    ang = np.arctan2(Y[gi] - cy, X[gi] - cx)
    gamma_line = idx[gi][np.argsort(ang)]
    lines = {"gamma": [gamma_line.tolist()], "alpha_c": [alpha_line.tolist()], "vertical": []}
    # p1, p2 are not grid nodes; the jump sits between the alpha end and the nearest gamma node
    gx, gy = X[gi], Y[gi]
    for x_corner, end in ((0.0, alpha_line[:1]), (run.L, alpha_line[-1:])):
        if len(end) and len(gx):
            k = int(np.argmin(np.hypot(gx - x_corner, gy)))
            lines["vertical"].append([int(idx[gi][k]), int(end[0])])
    header = {"A": run.A.to_dict(), "c": c, "h": run.h, "L": run.L}
    return Mesh(verts, faces.astype(np.int64), lines, header, idx)


@dataclass
class ScherkCheck:
    name: str
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def scherk_checks(run: ScherkRun) -> dict[str, ScherkCheck]:
    """Convergence, single crossing, sandwich, monotonicity in c and Cauchy decay of a finished run."""
    d = run.diagnostics
    per = d.get("per_c", {})
    missing = [c for c in run.c_schedule if c not in per]
    out = {}
    out["converged"] = ScherkCheck("converged", not missing and not d.get("failures"),
                                   {"missing": missing, "failures": d.get("failures", [])})
    bad_cols = {c: e["non_monotone_columns"] + e.get("pi_columns_non_monotone", 0) for c, e in per.items()}
    out["single_crossing"] = ScherkCheck("single_crossing", not missing and not any(bad_cols.values()),
                                         {"non_monotone_columns": bad_cols})
    keys = ("g_outside_sandwich", "u_below_zero", "u_above_fc")
    viol = {c: {k: e.get(k, 0) for k in keys} for c, e in per.items()}
    out["sandwich"] = ScherkCheck("sandwich", not missing and not any(sum(v.values()) for v in viol.values()),
                                  {"violations": viol})
    mono = d.get("monotonicity", [])
    out["monotone_in_c"] = ScherkCheck("monotone_in_c", not missing and all(m["ok"] for m in mono),
                                       {"pairs": mono})
    sups = [e["sup_K"] for e in d.get("cauchy", [])]
    decay = len(sups) >= 2 and all(b < a for a, b in zip(sups, sups[1:]))
    out["cauchy_decay"] = ScherkCheck("cauchy_decay", decay,
                                      {"sup_K": d.get("cauchy", []), "ratios": d.get("cauchy_ratios", [])})
    return out

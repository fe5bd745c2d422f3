"""Dirichlet problems for Q(u) = 0 (or prescribed H) on masked grids.

The discrete system is solved by damped Newton with a direct sparse solve.
Step acceptance asks for a strict decrease of the scaled residual
sup |F / (Q11 + Q22 + ux^2 + uy^2)|, which stays O(1) informative at
heights where the raw residual is exponentially small.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, ExponentOverflow, NoCertificateError, SolverBreakdown, StencilError
from .estimates import HeightCertificate, height_certificate, osc_certificate
from .grid import BOUNDARY, INTERIOR, OUTSIDE, DomainSpec, GridFunction, build_grid, set_boundary
from .lie_algebra import GroupMatrix, exp_Az
from .mc_operator import PiGraphSystem, discrete_jacobian, discrete_jet, interior_index, residual_vector

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
MAX_HALVINGS = 30

Data = Union[float, Callable]


@dataclass
class DirichletProblem:
    """Q(u) = 2H e^{-2u tr} W^3 in the domain, u = boundary_data on the boundary nodes.

    ``initial_guess`` is "boundary_mean", a callable (x, y) -> u, or a
    GridFunction on the same grid. ``grid`` may carry a prepared mask with
    boundary values already set, in which case domain sampling is skipped.
    """

    A: GroupMatrix
    domain: DomainSpec | None
    h: float
    boundary_data: Data = 0.0
    target_H: Data | None = None
    initial_guess: object = "boundary_mean"
    project_boundary: bool = True
    grid: GridFunction | None = None

    def discretize(self) -> GridFunction:
        if self.grid is not None:
            g = self.grid.copy()
        else:
            if self.domain is None:
                raise DomainError("a domain or a prepared grid is required")
            g = build_grid(self.domain, self.h)
            data = self.boundary_data
            fn = data if callable(data) else (lambda x, y, c=float(data): np.full(np.shape(x), c))
            g = set_boundary(g, fn, self.domain, project=self.project_boundary)
        bv = g.boundary_values
        if not np.all(np.isfinite(bv)):
            raise StencilError("boundary data must be finite")
        g.check()
        return g

    def start(self, g: GridFunction) -> GridFunction:
        guess = self.initial_guess
        u = g.copy()
        I, J = interior_index(u)
        if isinstance(guess, GridFunction):
            if guess.values.shape != u.values.shape:
                raise DomainError("prior solution lives on a different grid")
            u.values[I, J] = guess.values[I, J]
        elif callable(guess):
            u.values[I, J] = np.asarray(guess(u.x[I], u.y[J]), dtype=float)
        elif guess == "boundary_mean":
            shift = 0.1 * np.sign(self.A.trace)
            u.values[I, J] = float(np.mean(u.boundary_values)) + shift
        else:
            raise DomainError(f"unknown initial guess {guess!r}")
        return u


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    final_residual_sup: float
    damping_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    raw_residual_sup: float = math.nan
    sup_u: float = math.nan
    inf_u: float = math.nan
    sup_boundary: float = math.nan
    inf_boundary: float = math.nan
    osc: float = math.nan
    grid_slack: float = math.nan
    h: float = math.nan
    tol: float = DEFAULT_TOL
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _merit(system, u, threads):
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            F, scale = system.residual(u, threads)
        except ExponentOverflow:
            return math.inf, None
        r = np.abs(F / scale)
    if not np.all(np.isfinite(r)):
        return math.inf, F
    return float(r.max(initial=0.0)), F


def _fill_report(rep: SolverReport, u: GridFunction, system, threads) -> SolverReport:
    with np.errstate(over="ignore", invalid="ignore"):
        F, _ = system.residual(u, threads)
    rep.raw_residual_sup = float(np.max(np.abs(F), initial=0.0))
    rep.sup_u, rep.inf_u = u.sup(), u.inf()
    rep.sup_boundary, rep.inf_boundary = u.sup(u.boundary), u.inf(u.boundary)
    rep.osc = u.osc()
    rep.grid_slack = u.difference_slack()
    rep.h = u.h
    return rep


def newton(A, u0: GridFunction, H=None, tol: float = DEFAULT_TOL,
           max_iter: int = DEFAULT_MAX_ITER, threads: int = 1) -> tuple[GridFunction, SolverReport]:
    """Damped Newton from u0 (boundary values are kept fixed).

    ``A`` is a GroupMatrix (pi-graph equation with prescribed H) or any
    object with residual(u, threads) -> (F, scale) and jacobian(u, threads).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    system = PiGraphSystem(A, H) if isinstance(A, GroupMatrix) else A
    u = u0.copy()
    I, J = interior_index(u)
    merit, F = _merit(system, u, threads)
    if not math.isfinite(merit):
        raise SolverBreakdown("initial guess gives a non-finite residual", {"iteration": 0})
    rep = SolverReport(False, 0, merit, tol=tol)
    rep.residual_history.append(merit)
    it = 0
    while merit >= tol and it < max_iter:
        Jm = system.jacobian(u, threads)
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                d = spla.spsolve(Jm.tocsc(), -F)
            except (spla.MatrixRankWarning, RuntimeError) as exc:
                raise SolverBreakdown("singular Jacobian", {"iteration": it, "merit": merit, "error": str(exc)}) from exc
        if not np.all(np.isfinite(d)):
            raise SolverBreakdown("non-finite Newton step", {"iteration": it, "merit": merit})
        t, accepted = 1.0, False
        base = u.values[I, J].copy()
        for _ in range(MAX_HALVINGS + 1):
            u.values[I, J] = base + t * d
            m_new, F_new = _merit(system, u, threads)
            if m_new < merit:
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            u.values[I, J] = base
            rep.message = "line search failed to decrease the residual"
            break
        merit, F = m_new, F_new
        rep.damping_history.append(t)
        rep.residual_history.append(merit)
    rep.iterations = it
    rep.final_residual_sup = merit
    rep.converged = merit < tol
    if not rep.converged and not rep.message:
        rep.message = "iteration limit reached"
    return u, _fill_report(rep, u, system, threads)


def _offset_continuation(A, g: GridFunction, H, tol, max_iter, threads, min_step=1.0 / 1024):
    """Reach the boundary data g from its mean-free version by shifting the offset in steps.

    Mean-free data keeps the stiff zeroth-order term O(1); each shifted
    solve is warm started from the previous one moved by the offset increment.
    """
    m = float(np.mean(g.boundary_values))
    I, J = interior_index(g)
    base = g.copy()
    base.values[g.boundary] -= m
    base.values[I, J] = 0.1 * np.sign(A.trace)
    u, rep = newton(A, base, H, tol, max_iter, threads)
    if not rep.converged:
        return u, rep, 0.0
    t, dt, steps = 0.0, 0.25, 0
    while t < 1.0:
        t_new = min(1.0, t + dt)
        trial = u.copy()
        trial.values[trial.active] += m * (t_new - t)
        if t_new == 1.0:
            trial.values[g.boundary] = g.values[g.boundary]
        try:
            v, r = newton(A, trial, H, tol, max_iter, threads)
            ok = r.converged
        except SolverBreakdown:
            ok = False
        if ok:
            u, rep, t = v, r, t_new
            dt = min(2 * dt, 1.0)
            steps += 1
        else:
            dt *= 0.5
            if dt < min_step:
                return u, rep, t
    rep.message = f"reached by offset continuation in {steps} steps"
    return u, rep, 1.0


def solve(problem: DirichletProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          threads: int = 1, continuation: bool = True) -> tuple[GridFunction, SolverReport]:
    """Damped Newton from the problem's initial guess.

    If that fails and the guess is the default one, the data offset is
    reached by continuation; a failure there returns the first attempt,
    flagged as not converged.
    """
    g = problem.discretize()
    u0 = problem.start(g)
    first_err = None
    try:
        u, rep = newton(problem.A, u0, problem.target_H, tol, max_iter, threads)
    except SolverBreakdown as exc:
        first_err, u, rep = exc, None, None
    default_guess = isinstance(problem.initial_guess, str)
    if (rep is None or not rep.converged) and continuation and default_guess:
        try:
            v, r, reached = _offset_continuation(problem.A, g, problem.target_H, tol, max_iter, threads)
            if reached == 1.0 and r.converged:
                u, rep = v, r
        except SolverBreakdown:
            pass
    if rep is None:
        raise first_err
    u.meta.update({"A": problem.A.to_dict(), "solver": {"converged": rep.converged, "tol": tol}})
    return u, rep


# --- strip normalization and certificates ---------------------------------

def strip_frame(domain: DomainSpec, h: float) -> tuple[float, float]:
    """(x-shift, M): translating by the shift puts the domain in 1 + h <= x, inside (1, M)."""
    x0, _, _, _ = domain.bbox()
    M = 1.0 + domain.diameter() + 2.0 * h
    return 1.0 + h - x0, M


def certificate_for(A: GroupMatrix, domain: DomainSpec, h: float, alpha: float = 0.0, eps: float = 1e-6) -> HeightCertificate:
    _, M = strip_frame(domain, h)
    cert = height_certificate(A, M, alpha, eps)
    cert.meta["strip_shift"] = strip_frame(domain, h)[0]
    return cert


@dataclass
class CheckReport:
    name: str
    passed: bool
    value: float
    bound: float
    margin: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def verify_height_estimate(u: GridFunction, cert: HeightCertificate, slack: float | None = None) -> CheckReport:
    """sup u <= max(sup over the boundary, alpha) + C + grid_slack."""
    slack = u.difference_slack() if slack is None else slack
    bound = max(u.sup(u.boundary), cert.alpha) + cert.C_original + slack
    s = u.sup()
    return CheckReport("height_estimate", s <= bound, s, bound, bound - s,
                       {"C": cert.C_original, "alpha": cert.alpha, "grid_slack": slack})


def verify_trace_lemma(u: GridFunction, trace_sign: float, slack: float | None = None) -> CheckReport:
    """Trace >= 0: the infimum sits on the boundary; trace <= 0: the supremum does."""
    slack = u.difference_slack() if slack is None else slack
    details = {"grid_slack": slack}
    passed, margins = True, []
    if trace_sign >= 0:
        lo = u.inf(u.boundary) - slack
        margins.append(u.inf(u.interior) - lo)
        details["inf_interior"], details["inf_boundary"] = u.inf(u.interior), u.inf(u.boundary)
    if trace_sign <= 0:
        hi = u.sup(u.boundary) + slack
        margins.append(hi - u.sup(u.interior))
        details["sup_interior"], details["sup_boundary"] = u.sup(u.interior), u.sup(u.boundary)
    m = min(margins)
    passed = m >= 0
    return CheckReport("trace_lemma", passed, m, 0.0, m, details)


# --- (P_k) family -------------------------------------------------------------

@dataclass
class PkResult:
    k: float
    report: SolverReport
    solution: GridFunction | None
    osc_bound: float | None = None
    j_of_k: int | None = None
    error: str = ""

    @property
    def osc_ok(self) -> bool | None:
        if self.osc_bound is None or not self.report.converged:
            return None
        return self.report.osc <= self.osc_bound + self.report.grid_slack

    def to_dict(self) -> dict:
        j = self.j_of_k
        return {"k": self.k, "report": self.report.to_dict(), "osc_bound": self.osc_bound,
                "j_of_k": j if j is None or j < 2**53 else str(j), "osc_ok": self.osc_ok, "error": self.error}


def _solve_pk(A, base: GridFunction, k, prior, prior_k, tol, max_iter, threads):
    """Solve u = k on the boundary, warm starting from prior (shifted), refining the k-step on failure."""
    def attempt(start_vals, kk):
        g = base.copy()
        g.values[g.boundary] = kk
        I, J = interior_index(g)
        g.values[I, J] = start_vals[I, J] if start_vals is not None else kk + 0.1 * np.sign(A.trace)
        return newton(A, g, None, tol, max_iter, threads)

    if prior is None:
        return attempt(None, k)
    last_err = None
    for pieces in (1, 2, 4, 8, 16):
        vals, kk0, ok = prior.values.copy(), prior_k, True
        for step in range(1, pieces + 1):
            kk = prior_k + (k - prior_k) * step / pieces
            try:
                u, rep = attempt(vals + (kk - kk0), kk)
            except SolverBreakdown as exc:
                last_err, ok = exc, False
                break
            if not rep.converged:
                ok = False
                break
            vals, kk0 = u.values, kk
        if ok:
            return u, rep
    if last_err is not None:
        raise last_err
    return u, rep


def run_pk_family(A: GroupMatrix, domain: DomainSpec, k_list, h: float, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, threads: int = 1, keep_solutions: bool = True) -> list[PkResult]:
    """Solve Q(u) = 0, u = k on the boundary for each k, with oscillation certificates.

    Values of k are visited outward from the one closest to 0 so each solve is
    warm started from a neighbour; results come back in the order given.
    """
    base = build_grid(domain, h)
    base.check()
    _, M = strip_frame(domain, h)
    ks = [float(k) for k in k_list]
    order = sorted(range(len(ks)), key=lambda i: abs(ks[i]))
    results: dict[int, PkResult] = {}
    done: list[tuple[float, GridFunction]] = []
    for i in order:
        k = ks[i]
        prior = min(done, key=lambda kv: abs(kv[0] - k)) if done else None
        try:
            u, rep = _solve_pk(A, base, k, prior[1] if prior else None, prior[0] if prior else None, tol, max_iter, threads)
        except SolverBreakdown as exc:
            rep = SolverReport(False, 0, math.nan, tol=tol, message=str(exc))
            results[i] = PkResult(k, rep, None, error=f"SolverBreakdown: {exc}")
            continue
        res = PkResult(k, rep, u if keep_solutions else None)
        if A.trace > 0:
            try:
                oc = osc_certificate(A, M, k)
                res.osc_bound, res.j_of_k = oc.C_original, oc.j_of_k
            except NoCertificateError:
                pass
        elif A.trace == 0:
            res.osc_bound = 0.0
        if rep.converged:
            done.append((k, u))
        results[i] = res
    return [results[i] for i in range(len(ks))]


# --- left translations -----------------------------------------------------

def _covered(u: GridFunction, px, py):
    """Points whose bilinear stencil on the source grid uses active nodes only."""
    fi = (px - u.origin[0]) / u.hx
    fj = (py - u.origin[1]) / u.hy
    i0 = np.floor(fi).astype(int)
    j0 = np.floor(fj).astype(int)
    ok = (i0 >= 0) & (j0 >= 0) & (i0 < u.nx - 1) & (j0 < u.ny - 1)
    act = u.active
    i0c, j0c = np.clip(i0, 0, u.nx - 2), np.clip(j0, 0, u.ny - 2)
    for di in (0, 1):
        for dj in (0, 1):
            ok &= act[i0c + di, j0c + dj]
    return ok


def left_translate_solution(u: GridFunction, A: GroupMatrix, z0: float, h: float | None = None) -> GridFunction:
    """v(q) = u(e^{-A z0} q) + z0, resampled by bilinear interpolation on a grid over e^{A z0} Omega.

    Target nodes whose preimage has a full active bilinear cell are kept;
    those with all 8 neighbours kept are interior, the rest boundary.
    """
    h = u.h if h is None else h
    B = exp_Az(A, z0).matrix
    Binv = exp_Az(A, -z0).matrix
    X, Y = u.coords()
    act = u.active
    corners = B @ np.vstack([X[act], Y[act]])
    lo = corners.min(axis=1) - 2 * h
    hi = corners.max(axis=1) + 2 * h
    ox, oy = math.floor(lo[0] / h) * h, math.floor(lo[1] / h) * h
    nx = int(math.ceil((hi[0] - ox) / h)) + 1
    ny = int(math.ceil((hi[1] - oy) / h)) + 1
    TX, TY = np.meshgrid(ox + h * np.arange(nx), oy + h * np.arange(ny), indexing="ij")
    pre = Binv @ np.vstack([TX.ravel(), TY.ravel()])
    cov = _covered(u, pre[0], pre[1]).reshape(nx, ny)
    cov[0, :] = cov[-1, :] = cov[:, 0] = cov[:, -1] = False
    full = cov.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            full &= np.roll(np.roll(cov, di, axis=0), dj, axis=1)
    near = np.zeros_like(full)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            near |= np.roll(np.roll(full, di, axis=0), dj, axis=1)
    mask = np.where(full, INTERIOR, np.where(near & cov, BOUNDARY, OUTSIDE)).astype(np.int8)
    if not full.any():
        raise DomainError("translated domain has no interior nodes at this resolution")
    src = np.where(act, u.values, 0.0)
    interp = RegularGridInterpolator((u.x, u.y), src, method="linear", bounds_error=False, fill_value=np.nan)
    vals = np.full((nx, ny), np.nan)
    sel = mask != OUTSIDE
    pts = pre.T.reshape(nx, ny, 2)[sel]
    vals[sel] = interp(pts) + z0
    meta = dict(u.meta)
    meta["left_translation"] = {"z0": z0}
    return GridFunction(nx, ny, h, h, (ox, oy), vals, mask, meta)


def interpolation_bound(u: GridFunction, v: GridFunction, A: GroupMatrix, z0: float, H=None, threads: int = 1) -> float:
    """Residual budget for v: carried residual of u plus the Jacobian applied to the bilinear error."""
    Fu, _ = residual_vector(A, u, H, threads)
    jet = discrete_jet(u)
    interp_err = (u.hx**2 * np.max(np.abs(jet.uxx)) + u.hy**2 * np.max(np.abs(jet.uyy))) / 8.0
    Jv = discrete_jacobian(A, v, H, threads)
    jnorm = float(np.max(np.abs(Jv).sum(axis=1)))
    return math.exp(-2.0 * z0 * A.trace) * float(np.max(np.abs(Fu))) + jnorm * interp_err


def verify_left_translation(u: GridFunction, A: GroupMatrix, z0: float, threads: int = 1) -> tuple[GridFunction, CheckReport]:
    v = left_translate_solution(u, A, z0)
    Fv, _ = residual_vector(A, v, None, threads)
    r = float(np.max(np.abs(Fv)))
    bound = interpolation_bound(u, v, A, z0, None, threads)
    return v, CheckReport("left_translation", r < 10.0 * bound, r, 10.0 * bound, 10.0 * bound - r,
                          {"interpolation_bound": bound, "z0": z0})

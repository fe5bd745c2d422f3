"""Command-line driver: ``semidirect-graphs <command> --config run.json --out DIR``.

Every command writes ``<command>_report.json`` into the output directory,
also on failure. Exit codes: 0 success, 2 configuration or precondition
error, 3 solver breakdown, 4 a requested check failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DomainError,
    ExponentOverflow,
    NoBranchError,
    NoCertificateError,
    ProfileUnavailable,
    SolverBreakdown,
    StencilError,
)
from .estimates import claim2_curves, height_certificate, osc_certificate
from .expr import Expression
from .io import write_grid_csv, write_grid_json, write_json, write_obj, write_table
from .lie_algebra import exp_Az, metric_jet
from .pde_solver import DirichletProblem, run_pk_family, solve, strip_frame
from .scherk import (
    GammaSpec,
    export_fundamental_piece,
    make_run,
    normalize_frame,
    run_continuation,
    scherk_checks,
    smoothed_tent,
)

EXIT_OK, EXIT_CONFIG, EXIT_BREAKDOWN, EXIT_CHECK = 0, 2, 3, 4
COMMANDS = ("exp", "metric", "certify", "solve", "oscillation", "scherk", "claim2")

log = logging.getLogger("semidirect_graphs")


class Outcome:
    """Report body and named checks collected by a command."""

    def __init__(self, out: Path):
        self.out = out
        self.data: dict = {}
        self.checks: list[dict] = []
        self.files: list[str] = []

    def check(self, name: str, passed: bool, **details) -> None:
        self.checks.append({"name": name, "passed": bool(passed), **details})

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _zs(block) -> np.ndarray:
    return np.linspace(block.z_min, block.z_max, block.n)


def cmd_exp(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    zs = _zs(cfg.block("exp"))
    fr = exp_Az(A, zs)
    det = fr.det
    ref = np.exp(zs * A.trace)
    rows = zip(zs, fr.a11, fr.a12, fr.a21, fr.a22, det, ref)
    write_table(res.path("exp_table.csv"), ["z", "e11", "e12", "e21", "e22", "det", "exp_trace_z"], rows)
    err = np.abs(det - ref) / np.maximum(1.0, ref)
    res.data["A"] = A.to_dict()
    res.check("det_equals_exp_trace", np.max(err) <= 1e-10, max_relative_error=float(np.max(err)))


def cmd_metric(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    zs = _zs(cfg.block("metric"))
    m = metric_jet(A, zs)
    names = ["Q11", "Q22", "Q12", "G1", "G2", "G3", "dQ11", "dQ22", "dQ12", "dG1", "dG2", "dG3"]
    cols = [np.broadcast_to(getattr(m, n), zs.shape) for n in names]
    det = m.Q11 * m.Q22 - m.Q12 * m.Q12
    ref = np.exp(-2.0 * zs * A.trace)
    write_table(res.path("metric_table.csv"), ["z", *names, "det_Q", "exp_m2_trace_z"],
                zip(zs, *cols, det, ref))
    # the determinant is a difference of products and cancels for strongly hyperbolic A
    bound = 1e-10 * ref + 1e-14 * np.abs(m.Q11 * m.Q22)
    res.data["A"] = A.to_dict()
    res.check("det_identity", bool(np.all(np.abs(det - ref) <= bound)),
              max_error=float(np.max(np.abs(det - ref))))


def _first_certified_k(A, M, k, k_max):
    """Smallest integer step above k that admits an oscillation certificate."""
    kk = math.floor(k) + 1
    while kk <= k_max:
        try:
            osc_certificate(A, M, kk)
            return kk
        except NoCertificateError:
            kk += 1
    return None


def cmd_certify(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    blk = cfg.block("certify")
    M = blk.M if blk.M is not None else strip_frame(blk.domain.build(), blk.h)[1]
    res.data.update({"A": A.to_dict(), "M": M, "height": [], "oscillation": []})
    for alpha in blk.alpha:
        cert = height_certificate(A, M, alpha, blk.eps)
        res.data["height"].append(cert.to_dict())
        if not cert.trivial:
            res.check(f"defC_negative[alpha={alpha}]", cert.defC < 0, defC=cert.defC)
    for k in blk.k_list:
        try:
            oc = osc_certificate(A, M, k)
            res.data["oscillation"].append(oc.to_dict())
        except NoCertificateError as exc:
            k0 = _first_certified_k(A, M, k, blk.k_scan_max)
            res.data["oscillation"].append({"k": k, "error": "NoCertificate", "message": str(exc),
                                            "k0_scan": {"from": k, "to": blk.k_scan_max, "first_certified_k": k0}})
            res.check(f"osc_certificate[k={k}]", False, first_certified_k=k0)
    write_json(res.data, res.path("certificates.json"))


def cmd_solve(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    blk = cfg.block("solve")
    domain = blk.domain.build()
    data = Expression(blk.boundary)
    exact = Expression(blk.exact) if blk.exact else None
    runs = []
    for n, h in enumerate(blk.h_list):
        p = DirichletProblem(A, domain, h, data, target_H=blk.target_H, project_boundary=blk.project_boundary)
        u, rep = solve(p, cfg.tol, cfg.max_iter, cfg.threads)
        write_grid_csv(u, res.path(f"solution_{n}.csv"))
        write_grid_json(u, res.path(f"solution_{n}.json"))
        entry = {"h": h, "report": rep.to_dict()}
        if exact is not None:
            X, Y = u.coords()
            act = u.active
            entry["sup_error"] = float(np.max(np.abs(u.values[act] - exact(X[act], Y[act]))))
        runs.append(entry)
        res.check(f"converged[h={h}]", rep.converged, residual=rep.final_residual_sup)
    res.data.update({"A": A.to_dict(), "runs": runs})
    if exact is not None:
        errs = [r["sup_error"] for r in runs]
        hs = blk.h_list
        orders = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1])
                  for i in range(len(hs) - 1) if errs[i + 1] > 0]
        res.data["error_vs_h"] = {"h": hs, "sup_error": errs, "observed_order": orders}
        write_table(res.path("error_vs_h.csv"), ["h", "sup_error"], zip(hs, errs))
        if blk.assert_order is not None:
            res.check("observed_order", bool(orders) and min(orders) >= blk.assert_order,
                      orders=orders, required=blk.assert_order)
        if blk.assert_max_error is not None:
            res.check("max_error", errs[-1] < blk.assert_max_error, error=errs[-1], bound=blk.assert_max_error)


def _strictly(seq, decreasing=True) -> bool:
    return all((b < a) if decreasing else (b > a) for a, b in zip(seq, seq[1:]))


def cmd_oscillation(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    blk = cfg.block("oscillation")
    results = run_pk_family(A, blk.domain.build(), blk.k_list, blk.h, cfg.tol, cfg.max_iter, cfg.threads)
    rows = []
    for n, r in enumerate(results):
        if r.solution is not None:
            write_grid_csv(r.solution, res.path(f"pk_{n}.csv"))
        rep = r.report
        rows.append((r.k, rep.osc if rep.converged else math.nan,
                     math.nan if r.osc_bound is None else r.osc_bound, rep.grid_slack))
        if r.error:
            raise SolverBreakdown(f"k = {r.k}: {r.error}", {"k": r.k})
        res.check(f"converged[k={r.k}]", rep.converged, residual=rep.final_residual_sup)
        if r.osc_ok is not None:
            res.check(f"osc_bound[k={r.k}]", r.osc_ok, osc=rep.osc, bound=r.osc_bound, slack=rep.grid_slack)
    write_table(res.path("oscillation.csv"), ["k", "osc", "C_of_k", "grid_slack"], rows)
    res.data.update({"A": A.to_dict(), "results": [r.to_dict() for r in results]})
    if blk.assert_trends and A.trace > 0:
        by_k = sorted((r.k, r.report.osc) for r in results if r.report.converged)
        below = [o for k, o in by_k if k <= 0]
        above = [o for k, o in by_k if k >= 0]
        res.check("osc_grows_as_k_decreases", _strictly(below, decreasing=True), osc=below)
        res.check("osc_decays_as_k_increases", _strictly(above, decreasing=True), osc=above)


def _gamma(blk, L: float) -> GammaSpec:
    g = blk.gamma
    if g.kind == "smoothed_tent":
        return smoothed_tent(L, g.height, g.smoothing)
    e = Expression(g.expr)
    return GammaSpec(L, lambda x: e(x, 0.0 * np.asarray(x, dtype=float)), name=g.expr)


def cmd_scherk(cfg: ExperimentConfig, res: Outcome) -> None:
    blk = cfg.block("scherk")
    A, motion, L = normalize_frame(cfg.matrix(), (*blk.p1, 0.0), (*blk.p2, 0.0))
    res.data.update({"A_normalized": A.to_dict(), "motion": {"theta": motion.theta, "p1": list(motion.p1)}, "L": L})
    run = make_run(A, _gamma(blk, L), blk.c_schedule, blk.h, hz=blk.hz, K=tuple(blk.K), tol=cfg.tol,
                   max_iter=cfg.max_iter, threads=cfg.threads, motion=motion)
    run_continuation(run)
    checks = scherk_checks(run)
    for name in blk.assertions:
        res.check(name, checks[name].passed, **checks[name].details)
    res.data.update({
        "gamma": run.gamma.to_dict(), "profile": run.profile.to_dict(), "c_schedule": run.c_schedule,
        "h": run.h, "hz": run.hz, "K": list(run.K), "diagnostics": run.diagnostics,
        "reports": {c: r.to_dict() for c, r in run.reports.items()},
        "checks": {k: v.to_dict() for k, v in checks.items()},
    })
    solved = sorted(run.solutions)
    export = {"last": solved[-1:], "all": solved, "none": []}[blk.export]
    for n, c in enumerate(run.c_schedule):
        if c in run.killing_graphs:
            kg = run.killing_graphs[c]
            rows = [(x, z, v) for a, x in enumerate(kg.x) for b, z in enumerate(kg.z)
                    if np.isfinite(v := kg.values[a, b])]
            write_table(res.path(f"g_c_{n}.csv"), ["x", "z", "g"], rows)
        if c in export:
            write_grid_csv(run.solutions[c], res.path(f"u_c_{n}.csv"))
            write_obj(export_fundamental_piece(run, c), res.path(f"piece_c_{n}.obj"))
    write_json(res.data, res.path("scherk_manifest.json"))


def cmd_claim2(cfg: ExperimentConfig, res: Outcome) -> None:
    A = cfg.matrix()
    blk = cfg.block("claim2")
    rows = []
    for n in blk.n_list:
        cur = claim2_curves(A, n, blk.samples)
        rows.append((n, cur.z_n, cur.curvature, cur.deviation))
        write_table(res.path(f"claim2_curve_n{n}.csv"), ["x", "y"], cur.points)
    write_table(res.path("claim2_trend.csv"), ["n", "z_n", "curvature", "deviation"], rows)
    curv = [r[2] for r in rows]
    dev = [r[3] for r in rows]
    res.data.update({"A": A.to_dict(), "n": blk.n_list, "curvature": curv, "deviation": dev})
    if blk.assert_monotone:
        res.check("curvature_decreasing", _strictly(curv), curvature=curv)
        res.check("deviation_decreasing", _strictly(dev), deviation=dev)
    if blk.assert_curvature_below is not None:
        res.check("curvature_below", min(curv) < blk.assert_curvature_below, min_curvature=min(curv))


HANDLERS = {
    "exp": cmd_exp, "metric": cmd_metric, "certify": cmd_certify, "solve": cmd_solve,
    "oscillation": cmd_oscillation, "scherk": cmd_scherk, "claim2": cmd_claim2,
}

CONFIG_ERRORS = (ConfigError, DomainError, ProfileUnavailable, NoBranchError, StencilError)
BREAKDOWNS = (SolverBreakdown, ExponentOverflow)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="experiment JSON file")
    common.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--tol", type=float, help="Newton tolerance (overrides the config)")
    common.add_argument("--max-iter", type=int, help="Newton iteration cap (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads for assembly (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="semidirect-graphs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def _overrides(args) -> dict:
    upd = {}
    for key in ("tol", "max_iter", "threads"):
        v = getattr(args, key)
        if v is not None:
            upd[key] = v
    if upd.get("tol", 1.0) <= 0 or upd.get("max_iter", 1) < 1 or upd.get("threads", 1) < 1:
        raise ConfigError("--tol must be positive, --max-iter and --threads at least 1")
    return upd


def run_command(command: str, args) -> tuple[int, dict]:
    out = Path(args.out)
    res = Outcome(out)
    report = {"command": command, "config": str(args.config)}
    try:
        out.mkdir(parents=True, exist_ok=True)
        cfg = load_config(args.config)
        upd = _overrides(args)
        if upd:
            cfg = cfg.model_copy(update=upd)
        report.update({"tol": cfg.tol, "max_iter": cfg.max_iter, "threads": cfg.threads})
        HANDLERS[command](cfg, res)
        code = EXIT_OK if res.passed else EXIT_CHECK
        report["status"] = "ok" if res.passed else "check_failed"
    except CONFIG_ERRORS as exc:
        code, report["status"] = EXIT_CONFIG, "config_error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except BREAKDOWNS as exc:
        code, report["status"] = EXIT_BREAKDOWN, "solver_breakdown"
        report["error"] = {"type": type(exc).__name__, "message": str(exc),
                           "diagnostics": getattr(exc, "diagnostics", {})}
    except NoCertificateError as exc:
        code, report["status"] = EXIT_CHECK, "check_failed"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except OSError as exc:
        code, report["status"] = EXIT_CONFIG, "config_error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    report.update({"exit_code": code, "checks": res.checks, "files": res.files, "result": res.data})
    try:
        write_json(report, out / f"{command}_report.json")
    except OSError as exc:
        log.error("cannot write report: %s", exc)
    return code, report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    code, report = run_command(args.command, args)
    for c in report["checks"]:
        log.info("%s %s", "PASS" if c["passed"] else "FAIL", c["name"])
    if "error" in report:
        print(f"{report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``gesens``.

Exit codes: 0 success, 2 non-convergence, 3 invalid configuration (including
a violated smallness condition), 4 failed property check, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import apps, config, ge, qvi, verify
from .errors import ConfigError, DimensionError, NonConverged, SmallnessViolated
from .operators import check_firm_nonexpansive
from .report import PropertyReport

EXIT_OK, EXIT_NONCONV, EXIT_CONFIG, EXIT_FAIL, EXIT_USAGE = 0, 2, 3, 4, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- output ------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(format(x, ".15g"))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format(float(x), ".15g") if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, artifacts: dict, main: str):
    """Write every artifact under --out (if given) after all of them are computed; echo ``main``."""
    if args.out:
        out = Path(args.out)
        for name, text in artifacts.items():
            write_atomic(out / name, text)
    sys.stdout.write(artifacts[main])


# -- commands --------------------------------------------------------------------

def _solver(args, pc):
    changes = {}
    if getattr(args, "rho", None) is not None:
        changes["rho"] = "auto" if args.rho == "auto" else float(args.rho)
    if getattr(args, "solver", None):
        changes["method"] = args.solver
    return pc.solver.replace(**changes) if changes else pc.solver


def _need_qvi(pc):
    if pc.qvi is None:
        raise ConfigError("this command needs a 'Phi' entry in the config")
    return pc.qvi


def _audit_potential(prob, u, seed):
    sr = qvi.check_smallness(prob)
    if sr.case != "B":
        return sr, None
    region = verify.Region(prob.space, radius=1.0)
    rep = verify.check_potential_symmetry(prob.A, region, u, seed=seed)
    if not rep.passed:
        raise ConfigError(f"gradient-case smallness needs a symmetric A' but the audit failed: {rep}")
    return sr, rep


def cmd_ge_solve(args):
    pc = config.load(args.config)
    u = config.parse_vector(args.u)
    rep = ge.solve(pc.ge, u, _solver(args, pc))
    _emit(args, {"report.json": dumps(rep.to_dict())}, "report.json")
    return EXIT_OK if rep.converged else EXIT_NONCONV


def cmd_ge_sens(args):
    pc = config.load(args.config)
    u, h = config.parse_vector(args.u), config.parse_vector(args.h)
    cfg = _solver(args, pc)
    base = ge.solve(pc.ge, u, cfg).require("base solve")
    delta = ge.sensitivity(pc.ge, u, h, cfg, y_star=base.y, numeric=args.numeric)
    oracle = ge.fd_oracle_sensitivity(pc.ge, u, h, cfg, y_star=base.y)
    out = {"delta": delta, "oracle": oracle.value, "drift": oracle.drift,
           "gap": pc.space.norm(delta - oracle.value), "y": base.y}
    _emit(args, {"sensitivity.json": dumps(out)}, "sensitivity.json")
    return EXIT_OK


def _methods(m):
    return ["transformation", "iteration"] if m == "both" else [m]


def cmd_qvi_solve(args):
    pc = config.load(args.config)
    prob = _need_qvi(pc)
    u = config.parse_vector(args.u)
    _audit_potential(prob, u, pc.seed)
    cfg = _solver(args, pc)
    reps = {m: qvi.solve(prob, u, cfg, m) for m in _methods(args.method)}
    out = {m: r.to_dict() for m, r in reps.items()}
    if len(reps) == 2:
        out["gap"] = pc.space.norm(reps["transformation"].y - reps["iteration"].y)
    _emit(args, {"report.json": dumps(out)}, "report.json")
    return EXIT_OK if all(r.converged for r in reps.values()) else EXIT_NONCONV


def cmd_qvi_sens(args):
    pc = config.load(args.config)
    prob = _need_qvi(pc)
    u, h = config.parse_vector(args.u), config.parse_vector(args.h)
    _audit_potential(prob, u, pc.seed)
    cfg = _solver(args, pc)
    y_star = qvi.solve_transformation(prob, u, cfg).require().y
    out = {"y": y_star}
    deltas = {}
    for m in _methods(args.method):
        deltas[m] = qvi.sensitivity(prob, u, h, cfg, m, y_star=y_star)
        out[m] = {"delta": deltas[m]}
    if len(deltas) == 2:
        out["gap"] = pc.space.norm(deltas["transformation"] - deltas["iteration"])
    _emit(args, {"sensitivity.json": dumps(out)}, "sensitivity.json")
    return EXIT_OK


def cmd_qvi_diag(args):
    pc = config.load(args.config)
    prob = _need_qvi(pc)
    u = config.parse_vector(args.u)
    sr, audit = _audit_potential(prob, u, pc.seed)
    cfg = _solver(args, pc)
    y_star = qvi.solve_transformation(prob, u, cfg).require().y
    rho = cfg.resolve_rho(prob.A.mu, prob.A.lip)
    h = config.parse_vector(args.h) if args.h else np.ones_like(u)
    table = [{"t": t, "c_rho": qvi.c_rho_diagnostic(prob, u + t * h, u, y_star, rho)}
             for t in (1e-1, 1e-2, 1e-3, 1e-4)]
    out = {"smallness": sr.to_dict(), "rho": rho, "y_star": y_star, "c_rho_table": table,
           "symmetry_audit": None if audit is None else audit.to_dict()}
    _emit(args, {"diagnostics.json": dumps(out)}, "diagnostics.json")
    return EXIT_OK


def _app_tables(space, y, delta=None, oracle=None):
    sol = _csv(["index", "y"], [(i, v) for i, v in enumerate(y)])
    arts = {"solution.csv": sol}
    if delta is not None:
        arts["sensitivity.csv"] = _csv(["index", "delta", "fd_oracle", "gap"],
                                       [(i, d, o, abs(d - o)) for i, (d, o) in enumerate(zip(delta, oracle))])
    return arts


def cmd_app_sparse(args):
    n = args.n
    rng = np.random.default_rng(int(os.environ.get("GESENS_SEED", args.seed)))
    Q = 3.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    spec = apps.SparseProblemSpec(Q, rng.standard_normal(n), np.full(n, 1.0 / n))
    prob = apps.build_sparse(spec)
    u = config.parse_vector(args.u) if args.u else np.full(n, 0.5)
    cfg = ge.SolverConfig(method=args.solver)
    rep = ge.solve(prob, u, cfg).require()
    arts = {"report.json": dumps({"report": rep.to_dict(), "objective": apps.sparse_objective(spec, rep.y, u)})}
    delta = oracle = None
    if args.h:
        h = config.parse_vector(args.h)
        delta = ge.sensitivity(prob, u, h, cfg, y_star=rep.y)
        oracle = ge.fd_oracle_sensitivity(prob, u, h, cfg, y_star=rep.y).value
    arts.update(_app_tables(prob.space, rep.y, delta, oracle))
    _emit(args, arts, "report.json")
    return EXIT_OK


def cmd_app_quasilinear(args):
    spec = apps.QuasilinearSpec(n=args.n, beta=args.beta, alpha=args.alpha,
                                obstacle=None if args.obstacle is None else args.obstacle,
                                phi=args.phi)
    prob = apps.build_quasilinear(spec)
    u = config.parse_vector(args.u) if args.u else np.full(spec.n, -1.5)
    cfg = ge.SolverConfig(method=args.solver)
    a = qvi.solve_transformation(prob, u, cfg).require()
    b = qvi.solve_iteration(prob, u, cfg).require()
    out = {"transformation": a.to_dict(), "iteration": b.to_dict(),
           "gap": prob.space.norm(a.y - b.y), "constants": {"mu": prob.A.mu, "lip": prob.A.lip}}
    delta = oracle = None
    if args.h:
        h = config.parse_vector(args.h)
        delta = qvi.sensitivity_transformation(prob, u, h, cfg, y_star=a.y)
        d_it = qvi.sensitivity_iteration(prob, u, h, cfg, y_star=a.y)
        oracle = qvi.fd_oracle_sensitivity(prob, u, h, cfg, y_star=a.y)[0]
        out["sensitivity_gap"] = prob.space.norm(delta - d_it)
    arts = {"report.json": dumps(out)}
    arts.update(_app_tables(prob.space, a.y, delta, oracle))
    _emit(args, arts, "report.json")
    return EXIT_OK


def cmd_verify(args):
    pc = config.load(args.config)
    A = pc.ge.A
    u = config.parse_vector(args.u) if args.u else (
        None if A.param_matrix is None else np.zeros(A.param_matrix.shape[1]))
    region = verify.Region(pc.space, radius=args.radius)
    trials, seed = args.trials, pc.seed

    def grad(y):
        return A.eval(y, u)

    if args.suite == "cocoercive":
        rep = verify.check_cocoercivity(grad, A.lip, region, trials, seed)
    elif args.suite == "combined":
        rep = verify.check_combined_inequality(grad, A.mu, A.lip, region, trials, seed)
    elif args.suite == "constants":
        rep = verify.estimate_constants(A, region, u, trials, seed).audit(A.mu, A.lip)
    elif args.suite == "firm":
        rep = check_firm_nonexpansive(pc.ge.B, 1.0, u, trials, args.radius, seed=seed)
    elif args.suite == "symmetry":
        rep = verify.check_potential_symmetry(A, region, u, trials, seed)
    else:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            q, w, rho = rng.normal(0, 2), rng.normal(0, 1), rng.uniform(0.1, 2)
            v = float(np.maximum(abs(q) - rho * abs(w), 0) * np.sign(q))
            worst = max(worst, abs(v - verify.brute_force_prox(q, w, rho)))
        rep = PropertyReport("prox", trials, worst, 1e-6)
    _emit(args, {"verify.json": dumps(rep.to_dict())}, "verify.json")
    return EXIT_OK if rep.passed else EXIT_FAIL


# -- parser -------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="gesens", description="Solve and differentiate (quasi-)generalized equations.")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def common(sp, vec_h=False, needs_u=True):
        sp.add_argument("--config", required=True)
        sp.add_argument("--u", required=needs_u, help='inline JSON vector or @file')
        if vec_h:
            sp.add_argument("--h", required=True)
        sp.add_argument("--rho", default=None)
        sp.add_argument("--solver", choices=["fb", "newton"], default=None)
        sp.add_argument("--out", default=None)

    g = sub.add_parser("ge").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = g.add_parser("solve"); common(s); s.set_defaults(func=cmd_ge_solve)
    s = g.add_parser("sens"); common(s, vec_h=True)
    s.add_argument("--numeric", action="store_true", help="difference-quotient resolvent derivative")
    s.set_defaults(func=cmd_ge_sens)

    q = sub.add_parser("qvi").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    methods = ["transfo", "iter", "transformation", "iteration", "both"]
    s = q.add_parser("solve"); common(s)
    s.add_argument("--method", choices=methods, default="both"); s.set_defaults(func=cmd_qvi_solve)
    s = q.add_parser("sens"); common(s, vec_h=True)
    s.add_argument("--method", choices=methods, default="both"); s.set_defaults(func=cmd_qvi_sens)
    s = q.add_parser("diag"); common(s)
    s.add_argument("--h", default=None); s.set_defaults(func=cmd_qvi_diag)

    a = sub.add_parser("app").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = a.add_parser("sparse")
    s.add_argument("--n", type=int, default=16)
    s.add_argument("--u", "--u-file", dest="u", default=None)
    s.add_argument("--h", "--h-file", dest="h", default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--solver", choices=["fb", "newton"], default="fb")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_app_sparse)
    s = a.add_parser("quasilinear")
    s.add_argument("--n", type=int, default=32)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--obstacle", type=float, default=0.1)
    s.add_argument("--phi", choices=["smooth_abs", "abs", "none"], default="smooth_abs")
    s.add_argument("--u", "--u-file", dest="u", default=None)
    s.add_argument("--h", "--h-file", dest="h", default=None)
    s.add_argument("--solver", choices=["fb", "newton"], default="newton")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_app_quasilinear)

    s = sub.add_parser("verify")
    s.add_argument("--config", required=True)
    s.add_argument("--suite", required=True, choices=["cocoercive", "combined", "constants", "prox", "firm", "symmetry"])
    s.add_argument("--u", default=None)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except SmallnessViolated as exc:
        body = {"error": str(exc)}
        if exc.report is not None:
            body["smallness"] = exc.report.to_dict()
        sys.stderr.write(dumps(body))
        return EXIT_CONFIG
    except (ConfigError, DimensionError, ValueError) as exc:
        sys.stderr.write(dumps({"error": str(exc)}))
        return EXIT_CONFIG
    except NonConverged as exc:
        sys.stderr.write(dumps({"error": str(exc)}))
        return EXIT_NONCONV


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

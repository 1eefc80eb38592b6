"""The ten acceptance criteria, each reporting one PASS/FAIL line."""

import json
import math
import time
from pathlib import Path

import numpy as np
from gesens import HilbertSpace, SolverConfig
from gesens import ge, qvi
from gesens.apps import QuasilinearSpec, SparseProblemSpec, build_quasilinear, build_sparse, dirichlet_stiffness
from gesens.cli import EXIT_CONFIG, EXIT_OK, run
from gesens.resolvents import shrink, shrink_dir_deriv
from gesens.verify import Region, brute_force_prox, check_combined_inequality

from acceptance_log import record
from instances import box1d, qvi_abs1d, qvi_affine1d, qvi_suite, random_linear_ge, random_spd, smooth_ge

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
STEPS = (1e-2, 1e-3, 1e-4, 1e-5)


def test_criterion_01_contraction_certificate():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, failed = -math.inf, 0
    for _ in range(100):
        prob, u = random_linear_ge(rng)
        rep = ge.solve(prob, u)
        excess = rep.c_measured - rep.c_predicted
        worst = max(worst, excess)
        failed += (excess > 1e-6) or not rep.converged
    elapsed = time.perf_counter() - start
    ok = failed == 0 and elapsed < 10.0
    record(1, "contraction certificate", ok,
           f"100 instances, max(c_measured - c_predicted) = {worst:.2e}, {failed} failures, {elapsed:.2f} s")
    assert ok


def test_criterion_02_perturbation_bound():
    rng = np.random.default_rng(7)
    cfg = SolverConfig(tol_residual=1e-13)
    worst, violations = 0.0, 0
    for _ in range(100):
        prob, u = random_linear_ge(rng)
        zeta = rng.standard_normal(prob.space.dim) * 10.0 ** rng.uniform(-3, 0)
        base = ge.solve(prob, u, cfg).require()
        pert = ge.solve(prob, u, cfg, zeta=zeta).require()
        dist = prob.space.norm(base.y - pert.y)
        bound = ge.perturbation_bound(base, prob.space.dual_norm(zeta))
        worst = max(worst, dist / bound)
        violations += dist > bound * (1 + 1e-9)
    ok = violations == 0
    record(2, "perturbation bound", ok, f"100 pairs, max distance/bound = {worst:.4f}, {violations} violations")
    assert ok


def test_criterion_03_sensitivity_correctness():
    prob = box1d()
    worst_exact = 0.0
    for u in (-1.0, 0.0, 2.0):
        for h in (1.0, -1.0):
            delta = ge.sensitivity(prob, [u], [h])
            fd = ge.fd_oracle_sensitivity(prob, [u], [h], steps=(0.5, 0.1) + STEPS)
            worst_exact = max(worst_exact, max(abs(q[0] - delta[0]) for q in fd.quotients))
    smooth_ok = True
    cfg = SolverConfig(tol_residual=1e-13)
    rng = np.random.default_rng(3)
    for _ in range(5):
        sp, u = smooth_ge(rng)
        h = rng.standard_normal(2)
        delta = ge.sensitivity(sp, u, h, cfg)
        fd = ge.fd_oracle_sensitivity(sp, u, h, cfg, steps=STEPS)
        errs = [np.linalg.norm(q - delta) for q in fd.quotients]
        smooth_ok &= all(b < a for a, b in zip(errs, errs[1:]))
    ok = worst_exact <= 2e-10 and smooth_ok
    record(3, "sensitivity correctness", ok,
           f"box suite max |delta - quotient| = {worst_exact:.1e}; smooth errors monotone: {smooth_ok}")
    assert ok


def _ge_suite():
    rng = np.random.default_rng(11)
    cases = [(box1d(), [u], [h]) for u in (-1.0, 0.0, 2.0) for h in (1.0, -1.0)]
    for _ in range(3):
        prob, u = smooth_ge(rng)
        cases.append((prob, u, rng.standard_normal(2)))
    for _ in range(5):
        prob, u = random_linear_ge(rng, n=int(rng.integers(1, 20)))
        cases.append((prob, u, rng.standard_normal(u.size)))
    n = 10
    Q = 3.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    sparse = build_sparse(SparseProblemSpec(Q, rng.standard_normal(n), np.full(n, 0.1)))
    cases.append((sparse, rng.uniform(0, 2, n), rng.standard_normal(n)))
    return cases


def test_criterion_04_rho_independence():
    cfg = SolverConfig(tol_residual=1e-12)
    worst = 0.0
    cases = _ge_suite()
    for prob, u, h in cases:
        y = ge.solve(prob, u, cfg).require().y
        rho = cfg.resolve_rho(prob.A.mu, prob.A.lip)
        d1 = ge.sensitivity(prob, u, h, cfg, y_star=y)
        d2 = ge.sensitivity(prob, u, h, cfg.replace(rho=rho / 2), y_star=y)
        worst = max(worst, prob.space.norm(d1 - d2) / (1 + prob.space.norm(d1)))
    ok = worst <= 1e-8
    record(4, "rho independence", ok, f"{len(cases)} problems, max relative gap = {worst:.1e}")
    assert ok


def test_criterion_05_convex_inequality():
    rng = np.random.default_rng(5)
    violations, worst = 0, -math.inf
    for _ in range(20):
        n = int(rng.integers(2, 8))
        Q = random_spd(rng, n, 0.5, 5.0)
        Q = 0.5 * (Q + Q.T)
        lam = np.linalg.eigvalsh(Q)
        rep = check_combined_inequality(lambda y: Q @ y, lam[0], lam[-1], Region(HilbertSpace.identity(n), 3.0),
                                        trials=1000, seed=int(rng.integers(1 << 30)))
        violations += not rep.passed
        worst = max(worst, rep.worst_violation)
    # negative control: underestimated Lipschitz constant along the top eigenvector
    Q = np.diag([1.0, 4.0])
    neg = check_combined_inequality(lambda y: Q @ y, 1.0, 2.0, Region(HilbertSpace.identity(2)),
                                    pairs=[(np.zeros(2), np.array([0.0, 1.0]))])
    ok = violations == 0 and not neg.passed
    record(5, "convex inequality suite", ok,
           f"20 quadratics x 1000 pairs, {violations} violations (worst {worst:.1e}); "
           f"wrong-constant control fails: {not neg.passed} (violation {neg.worst_violation:.2f})")
    assert ok


def test_criterion_06_prox_oracle():
    rng = np.random.default_rng(6)
    worst_prox = 0.0
    for i in range(1000):
        rho, w = rng.uniform(0.1, 3.0), rng.standard_normal()
        q = rng.normal(0, 3)
        if i % 4 == 0:
            q = np.sign(q) * rho * abs(w)     # |q| = rho |u|
        elif i % 4 == 1:
            w = 0.0
        v = shrink(np.array([q]), rho * abs(w))[0]
        worst_prox = max(worst_prox, abs(v - brute_force_prox(q, w, rho)))
    deriv_ok, worst_deriv = True, 0.0
    for i in range(200):
        rho, u, q = rng.uniform(0.2, 2.0), rng.standard_normal(), rng.standard_normal()
        if i % 3 == 0:
            q = np.sign(q) * rho * abs(u)     # kink
        elif i % 3 == 1:
            q, u = 0.0, 0.0                   # double kink at the origin
        k, h = rng.standard_normal(), rng.standard_normal()
        d = shrink_dir_deriv(rho, np.array([q]), np.array([u]), np.array([k]), np.array([h]))[0]
        base = shrink(np.array([q]), rho * abs(u))[0]
        errs = [abs((shrink(np.array([q + t * k]), rho * abs(u + t * h))[0] - base) / t - d) for t in STEPS]
        C = errs[0] / STEPS[0]
        deriv_ok &= all(e <= C * t + 1e-9 for t, e in zip(STEPS[1:], errs[1:]))
        worst_deriv = max(worst_deriv, errs[-1])
    ok = worst_prox <= 1e-6 and deriv_ok
    record(6, "prox oracle", ok, f"1000 prox instances max error {worst_prox:.1e}; "
                                  f"derivative O(t) fit holds: {deriv_ok} (error at t=1e-5: {worst_deriv:.1e})")
    assert ok


def test_criterion_07_qvi_approach_agreement():
    start = time.perf_counter()
    worst_y, worst_d = 0.0, 0.0
    for prob, u, hs in qvi_suite():
        a = qvi.solve_transformation(prob, u).require()
        b = qvi.solve_iteration(prob, u).require()
        worst_y = max(worst_y, prob.space.norm(a.y - b.y) / (1 + prob.space.norm(a.y)))
        for h in hs:
            da = qvi.sensitivity_transformation(prob, u, h, y_star=a.y)
            db = qvi.sensitivity_iteration(prob, u, h, y_star=a.y)
            worst_d = max(worst_d, prob.space.norm(da - db) / (1 + prob.space.norm(da)))
    spec = QuasilinearSpec(n=32)
    prob = build_quasilinear(spec)
    cfg = SolverConfig(method="newton")
    u = np.full(spec.n, -1.5)
    a = qvi.solve_transformation(prob, u, cfg).require()
    b = qvi.solve_iteration(prob, u, cfg).require()
    app_y = prob.space.norm(a.y - b.y) / (1 + prob.space.norm(a.y))
    app_d = 0.0
    for h in (np.ones(spec.n), np.cos(np.pi * spec.nodes), np.sin(3 * np.pi * spec.nodes)):
        da = qvi.sensitivity_transformation(prob, u, h, cfg, y_star=a.y)
        db = qvi.sensitivity_iteration(prob, u, h, cfg, y_star=a.y)
        app_d = max(app_d, prob.space.norm(da - db) / (1 + prob.space.norm(da)))
    elapsed = time.perf_counter() - start
    ok = max(worst_y, worst_d, app_y, app_d) <= 1e-8 and elapsed < 60.0
    record(7, "QVI approach agreement", ok,
           f"1-D suite gaps y {worst_y:.1e} / delta {worst_d:.1e}; n=32 app gaps y {app_y:.1e} / delta {app_d:.1e}; "
           f"{elapsed:.1f} s")
    assert ok


def test_criterion_08_apriori_bound():
    """Slack 1e-10 covers the inner GE solves, each accurate to tol_outer / 10."""
    cfg = SolverConfig(tol_residual=1e-12)
    checked, violations, tightest = 0, 0, 0.0
    cases = [(qvi_abs1d(), [4.0], [1.0]), (qvi_abs1d(), [4.0], [-1.0]), (qvi_abs1d(), [1.0], [1.0]),
             (qvi_abs1d(), [-1.0], [1.0]), (qvi_affine1d(), [2.0], [1.0]), (qvi_affine1d(), [2.0], [-1.0]),
             (qvi_affine1d(), [0.0], [1.0])]
    for prob, u_star, h in cases:
        y_star = qvi.solve_transformation(prob, u_star, cfg).require().y
        rho = cfg.resolve_rho(prob.A.mu, prob.A.lip)
        c = ge.contraction_factor(rho, prob.A.mu, prob.A.lip)
        for t in (1e-1, 1e-2):
            u = np.asarray(u_star) + t * np.asarray(h)
            rep = qvi.solve_iteration(prob, u, cfg, anchor=y_star).require()
            c_rho = qvi.c_rho_diagnostic(prob, u, u_star, y_star, rho)
            for n, y_n in enumerate(rep.iterates):
                err = prob.space.norm(y_n - rep.y)
                bound = qvi.apriori_bound(rep.smallness.c_tilde, c, n, c_rho)
                checked += 1
                violations += err > bound + 1e-10
                if bound > 0:
                    tightest = max(tightest, err / bound)
    ok = violations == 0 and checked > 0
    record(8, "a-priori iteration bound", ok,
           f"{checked} iterates, {violations} violations, max error/bound = {tightest:.3f}")
    assert ok


def _cli(argv, capsys):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_criterion_09_smallness_gate(capsys, tmp_path):
    code, out, err = _cli(["qvi", "solve", "--config", CONFIGS / "qvi_violating.json", "--u", "[1, 1]"], capsys)
    sm = json.loads(err).get("smallness", {}) if err else {}
    rejected = code == EXIT_CONFIG and out == "" and "bound_A" in sm and "bound_B" in sm \
        and "1/gamma" in err and "2 sqrt(gamma)/(1+gamma)" in err
    code_b, out_b, _ = _cli(["qvi", "diag", "--config", CONFIGS / "qvi_gradient.json", "--u", "[3, 8]"], capsys)
    diag = json.loads(out_b) if code_b == EXIT_OK else {}
    case_b_ok = diag.get("smallness", {}).get("case") == "B" and (diag.get("symmetry_audit") or {}).get("pass")
    cfg = json.loads((CONFIGS / "qvi_gradient.json").read_text())
    cfg["potential"] = False
    p = tmp_path / "nopot.json"
    p.write_text(json.dumps(cfg))
    needs_flag = _cli(["qvi", "diag", "--config", p, "--u", "[3, 8]"], capsys)[0] == EXIT_CONFIG
    cfg["potential"] = True
    cfg["A"].update(matrix=[[1.0, 1.0], [-1.0, 4.0]], mu=1.0, lip=4.2)
    p = tmp_path / "skew.json"
    p.write_text(json.dumps(cfg))
    audit_fails = _cli(["qvi", "diag", "--config", p, "--u", "[3, 8]"], capsys)[0] == EXIT_CONFIG
    ok = rejected and bool(case_b_ok) and needs_flag and audit_fails
    record(9, "smallness gate", ok,
           f"violating config exit 3 naming both bounds: {rejected}; case-B config accepted with symmetry audit: "
           f"{bool(case_b_ok)}; rejected without potential flag: {needs_flag}; non-symmetric A rejected: {audit_fails}")
    assert ok


def test_criterion_10_quasilinear_sanity():
    cfg = SolverConfig(method="newton", tol_residual=1e-12)
    spec = QuasilinearSpec(n=32, beta=0.0, obstacle=None, phi="none")
    prob = build_quasilinear(spec)
    u = np.cos(2 * np.pi * spec.nodes)
    y = qvi.solve_transformation(prob, u, cfg).require().y
    direct = np.linalg.solve(dirichlet_stiffness(spec.n), -spec.mesh * u)
    lin_err = np.max(np.abs(y - direct))
    spec = QuasilinearSpec(n=32, beta=0.0, obstacle=0.1, phi="none")
    prob = build_quasilinear(spec)
    u = -np.ones(spec.n)
    y = qvi.solve_transformation(prob, u, cfg).require().y
    lam = prob.space.riesz_inv(-prob.A.eval(y, u))
    active = int(np.sum(np.abs(0.1 - y) <= 1e-9))
    comp = np.max(np.abs(np.minimum(0.1 - y, lam)))
    ok = lin_err <= 1e-10 and comp <= 1e-8 and active > 0
    record(10, "quasilinear app sanity", ok,
           f"linear reduction max error {lin_err:.1e}; obstacle case {active} active nodes, "
           f"complementarity residual {comp:.1e}")
    assert ok

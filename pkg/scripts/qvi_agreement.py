"""Cross-check the two QVI approaches and the a-priori iteration bound on 1-D problems."""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from gesens import SolverConfig  # noqa: E402
from gesens import ge, qvi  # noqa: E402
from instances import qvi_affine1d, qvi_multi, qvi_suite  # noqa: E402


def main():
    cfg = SolverConfig(tol_residual=1e-12)
    print("solutions and sensitivities (transformation vs iteration)")
    print(f"{'u*':>6} {'h':>5} {'y':>10} {'gap y':>9} {'delta':>10} {'gap delta':>10} {'fd(1e-5)':>10}")
    for prob, u, hs in qvi_suite():
        a = qvi.solve_transformation(prob, u, cfg).require()
        b = qvi.solve_iteration(prob, u, cfg).require()
        for h in hs:
            da = qvi.sensitivity_transformation(prob, u, h, cfg, y_star=a.y)
            db = qvi.sensitivity_iteration(prob, u, h, cfg, y_star=a.y)
            fd, _ = qvi.fd_oracle_sensitivity(prob, u, h, cfg, y_star=a.y)
            print(f"{u[0]:6.2f} {h[0]:5.1f} {a.y[0]:10.6f} {abs(a.y[0] - b.y[0]):9.1e} "
                  f"{da[0]:10.6f} {abs(da[0] - db[0]):10.1e} {fd[0]:10.6f}")

    prob = qvi_multi()
    u = np.array([0.4, -0.2, 1.1])
    a = qvi.solve_transformation(prob, u, cfg).require()
    b = qvi.solve_iteration(prob, u, cfg).require()
    print(f"\n3-D instance: gap {prob.space.norm(a.y - b.y):.1e}, transformation iters {a.inner.iters}, "
          f"iteration stages {b.stages} (outer rate {b.outer_rate:.3f}, c_tilde {b.smallness.c_tilde:.3f})")

    print("\na-priori bound, affine instance anchored at y*(u*=2), u = u* + t")
    prob = qvi_affine1d()
    y_star = qvi.solve_transformation(prob, [2.0], cfg).y
    rho = cfg.resolve_rho(prob.A.mu, prob.A.lip)
    c = ge.contraction_factor(rho, prob.A.mu, prob.A.lip)
    for t in (1e-1, 1e-2):
        u = np.array([2.0 + t])
        rep = qvi.solve_iteration(prob, u, cfg, anchor=y_star)
        c_rho = qvi.c_rho_diagnostic(prob, u, [2.0], y_star, rho)
        print(f"t={t:g}: C_rho={c_rho:.3e}")
        for n, y_n in enumerate(rep.iterates[:8]):
            err = prob.space.norm(y_n - rep.y)
            bound = qvi.apriori_bound(rep.smallness.c_tilde, c, n, c_rho)
            print(f"  n={n}  error {err:.3e}  bound {bound:.3e}")


if __name__ == "__main__":
    main()

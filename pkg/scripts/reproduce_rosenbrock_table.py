"""Rosenbrock benchmark table: dims 2/5/10/20 under GD, Adam, BFGS, SSBFGS, SSBroyden.

    python3 scripts/reproduce_rosenbrock_table.py [--out table.csv] [--audit]

With --audit every quasi-Newton iteration is re-checked (secant residual,
SPD of H, Strong Wolfe conditions) and a count of violations is printed.
"""
import argparse
import time

import numpy as np

from selfscaled import bench
from selfscaled.linesearch import armijo_ok, curvature_ok
from selfscaled.testfns import rosenbrock


def count_violations(rows) -> int:
    bad = 0
    for r in rows:
        if r.result is None:
            continue
        prob = rosenbrock(r.dimension)
        ls = r.result.config.linesearch
        for a in r.result.audits:
            if a.updated and (not a.spd_ok or a.secant_residual > 1e-12 * (1 + a.s_norm)):
                bad += 1
            if a.ls_status == "Converged" and r.result.config.globalization == "wolfe":
                f_new, g_new = prob.eval_fg(a.x + a.alpha * a.p)
                d0 = float(a.g @ a.p)
                ok = armijo_ok(f_new, a.alpha, a.f, d0, ls.c1) and curvature_ok(float(g_new @ a.p), d0, ls.c2)
                bad += not ok
    return bad


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="write rows as CSV")
    ap.add_argument("--audit", action="store_true")
    args = ap.parse_args()

    t0 = time.perf_counter()
    rows = bench.table_rosenbrock(audit=args.audit)
    elapsed = time.perf_counter() - t0
    print(bench.format_table(rows))
    print(f"\n{len(rows)} runs in {elapsed:.2f} s")
    for r in rows:
        if r.status == "GradTol":
            print(f"dim {r.dimension:2d} {r.optimizer:9s} max|x - 1| = {np.abs(r.params - 1).max():.1e}")
    if args.audit:
        print(f"audit violations: {count_violations(rows)}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench.write_table_csv(rows, fh)


if __name__ == "__main__":
    main()

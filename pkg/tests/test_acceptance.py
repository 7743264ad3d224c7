"""Acceptance criteria 1-11, one test each.

Every test prints a ``criterion N: PASS|FAIL`` line (visible with ``-s``)
and the conftest hook repeats the verdicts in the terminal summary.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import random_spd
from selfscaled import bench
from selfscaled.linalg import spd_factor
from selfscaled.linesearch import armijo_ok, curvature_ok
from selfscaled.neuralnet import poisson_pinnlite, regression_problem
from selfscaled.optimizers import ConvergenceCriteria, OptimizerConfig, minimize
from selfscaled.optimizers.lbfgs import LBFGSHistory, lbfgs_direction
from selfscaled.optimizers.updates import (
    bfgs_inverse_update,
    broyden_scaling_chain,
    dfp_inverse_update,
    scaling_chain,
    ssbroyden_inverse_update,
)
from selfscaled.testfns import grad_check, quadratic_xy, rosenbrock
from selfscaled.trustregion import dogleg

QN = ("bfgs", "ssbfgs", "ssbroyden")
REFERENCE_ITERS = {
    "bfgs": {2: 17, 5: 26, 10: 43, 20: 60},
    "ssbroyden": {2: 17, 5: 27, 10: 57, 20: 81},
    "ssbfgs": {2: 19, 5: 31, 10: 49, 20: 70},
}


class Verdict:
    """Collects named checks; fails the test listing every broken one."""

    def __init__(self, num):
        self.num = num
        self.failures = []

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def finish(self):
        print(f"\ncriterion {self.num}: {'PASS' if not self.failures else 'FAIL'}")
        for f in self.failures:
            print(f"  - {f}")
        assert not self.failures, "; ".join(self.failures)


@pytest.fixture(scope="module")
def audited_table():
    return bench.table_rosenbrock(optimizers=QN, audit=True)


@pytest.mark.criterion(1, "Rosenbrock table parity")
def test_criterion_1_rosenbrock_table():
    v = Verdict(1)
    t0 = time.perf_counter()
    rows = bench.table_rosenbrock(optimizers=QN)
    elapsed = time.perf_counter() - t0
    print()
    print(bench.format_table(rows))
    for r in rows:
        ref = REFERENCE_ITERS[r.optimizer][r.dimension]
        tag = f"{r.optimizer} dim {r.dimension}"
        v.check(r.status == "GradTol", f"{tag}: status {r.status}")
        v.check(ref <= r.iterations <= 2 * ref + 10, f"{tag}: {r.iterations} iterations outside [{ref}, {2 * ref + 10}]")
        v.check(r.final_loss <= 1e-12, f"{tag}: final loss {r.final_loss:.3e}")
        v.check(np.abs(r.params - 1.0).max() <= 1e-5, f"{tag}: max |x - 1| = {np.abs(r.params - 1).max():.2e}")
    v.check(elapsed < 5.0, f"table took {elapsed:.2f} s")
    print(f"quasi-Newton rows: {elapsed:.2f} s")
    v.finish()


@pytest.mark.criterion(2, "First-order contrast")
def test_criterion_2_first_order_contrast():
    v = Verdict(2)
    gd = bench.run_table_row(2, "gd")
    v.check(gd.status == "MaxIters" and gd.iterations == 5000, f"gd: {gd.status} after {gd.iterations}")
    v.check(gd.final_loss >= 1e-6, f"gd final loss {gd.final_loss:.3e}")
    adam = bench.run_table_row(2, "adam").result
    a_it = adam.first_iter_below(1e-10)
    print(f"\ngd final loss {gd.final_loss:.3e}; adam reaches 1e-10 at iteration {a_it}")
    for name in QN:
        q_it = bench.run_table_row(2, name).result.first_iter_below(1e-10)
        print(f"{name} reaches 1e-10 at iteration {q_it}")
        v.check(q_it is not None, f"{name} never reaches 1e-10")
        if q_it is not None and a_it is not None:
            v.check(a_it >= 10 * q_it, f"{name}: {q_it} vs adam {a_it}")
    v.finish()


@pytest.mark.criterion(3, "Family-reduction oracle")
def test_criterion_3_family_reduction():
    v = Verdict(3)
    rng = np.random.default_rng(3)
    worst_bfgs = worst_dfp = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        H, A = random_spd(rng, n), random_spd(rng, n)
        s = rng.standard_normal(n)
        y = A @ s
        ys, yHy = float(y @ s), float(y @ H @ y)
        sBs = float(s @ np.linalg.solve(H, s))
        q0 = scaling_chain(ys, sBs, yHy, n, theta=0.0, tau=1.0)
        q1 = scaling_chain(ys, sBs, yHy, n, theta=1.0, tau=1.0)
        worst_bfgs = max(worst_bfgs, np.abs(ssbroyden_inverse_update(H, s, y, q0) - bfgs_inverse_update(H, s, y)).max())
        worst_dfp = max(worst_dfp, np.abs(ssbroyden_inverse_update(H, s, y, q1) - dfp_inverse_update(H, s, y)).max())
    print(f"\nmax deviation: BFGS {worst_bfgs:.2e}, DFP {worst_dfp:.2e}")
    v.check(worst_bfgs <= 1e-14, f"BFGS deviation {worst_bfgs:.2e}")
    v.check(worst_dfp <= 1e-13, f"DFP deviation {worst_dfp:.2e}")
    v.finish()


@pytest.mark.criterion(4, "Worked-vector regression")
def test_criterion_4_worked_vector():
    v = Verdict(4)
    H = 0.5 * np.eye(2)
    s, y = np.array([1.0, 0.0]), np.array([1.0, 1.0])
    q = broyden_scaling_chain(s, y, 2.0 * np.eye(2), H, 2)
    Hn = ssbroyden_inverse_update(H, s, y, q)
    print(f"\ntheta={q.theta!r} tau={q.tau!r} phi={q.phi!r}\nH+={Hn.tolist()}")
    v.check(abs(q.theta + 0.5) <= 1e-14, f"theta {q.theta!r}")
    v.check(abs(q.tau - 0.5) <= 1e-14, f"tau {q.tau!r}")
    v.check(abs(q.phi - 3.0) <= 1e-14, f"phi {q.phi!r}")
    v.check(np.abs(Hn - np.array([[3.0, -2.0], [-2.0, 2.0]])).max() <= 1e-14, f"H+ {Hn.tolist()}")
    v.finish()


@pytest.mark.criterion(5, "Secant and SPD invariants")
def test_criterion_5_secant_spd(audited_table):
    v = Verdict(5)
    runs = [(f"{r.optimizer} dim {r.dimension}", r.result) for r in audited_table]
    for method in QN:
        runs.append((f"{method} default search", minimize(rosenbrock(10), np.full(10, 0.5), method=method, audit=True)))
    n_updates = 0
    for tag, res in runs:
        for a in res.audits:
            if a.updated:
                n_updates += 1
                v.check(a.secant_residual <= 1e-12 * (1 + a.s_norm),
                        f"{tag} iter {a.k}: secant residual {a.secant_residual:.2e}")
                v.check(a.spd_ok, f"{tag} iter {a.k}: H not SPD")
        v.check(spd_factor(res.H) is not None, f"{tag}: final H not SPD")
    print(f"\n{n_updates} audited updates across {len(runs)} runs")
    v.finish()


@pytest.mark.criterion(6, "Line-search audits")
def test_criterion_6_line_search(audited_table):
    v = Verdict(6)
    n_wolfe = 0
    for r in audited_table:
        prob = rosenbrock(r.dimension)
        ls = r.result.config.linesearch
        for a in r.result.audits:
            if a.ls_status != "Converged":
                continue
            n_wolfe += 1
            f_new, g_new = prob.eval_fg(a.x + a.alpha * a.p)
            dphi0 = float(a.g @ a.p)
            tag = f"{r.optimizer} dim {r.dimension} iter {a.k}"
            v.check(armijo_ok(f_new, a.alpha, a.f, dphi0, 1e-4), f"{tag}: Armijo")
            v.check(curvature_ok(float(g_new @ a.p), dphi0, 0.9), f"{tag}: curvature")
            v.check(ls.c1 == 1e-4 and ls.c2 == 0.9, "constants")

    prob = rosenbrock(2)
    cfg = OptimizerConfig(method="gd", globalization="backtracking",
                          criteria=ConvergenceCriteria(gtol=1e-6, max_iters=300), audit=True)
    res = minimize(prob, np.full(2, 0.5), config=cfg)
    rho, a_bar = cfg.linesearch.rho, cfg.linesearch.alpha_init
    for a in res.audits:
        f_acc = prob.eval_f(a.x + a.alpha * a.p)
        dphi0 = float(a.g @ a.p)
        v.check(armijo_ok(f_acc, a.alpha, a.f, dphi0, 1e-4), f"backtracking iter {a.k}: Armijo")
        if a.alpha != a_bar:
            bigger = a.alpha / rho
            v.check(not armijo_ok(prob.eval_f(a.x + bigger * a.p), bigger, a.f, dphi0, 1e-4),
                    f"backtracking iter {a.k}: alpha/rho also passes")

    q = quadratic_xy()
    hand = minimize(q, np.ones(2), method="gd", globalization="backtracking", audit=True,
                    criteria=ConvergenceCriteria(max_iters=1))
    v.check(hand.audits[0].alpha == 0.5, f"hand example alpha {hand.audits[0].alpha}")
    print(f"\n{n_wolfe} Wolfe steps and {len(res.audits)} backtracking steps re-verified")
    v.finish()


@pytest.mark.criterion(7, "Trust-region contract")
def test_criterion_7_trust_region():
    v = Verdict(7)
    n = 0
    for method in QN:
        for dim in (2, 5, 10):
            res = minimize(rosenbrock(dim), np.full(dim, 0.5), method=method,
                           globalization="trust-region", audit=True)
            v.check(res.status == "GradTol", f"{method} dim {dim}: {res.status}")
            for a, nxt in zip(res.audits, res.audits[1:] + [None]):
                n += 1
                gn = np.linalg.norm(a.g)
                v.check(np.linalg.norm(a.p) <= a.delta * (1 + 1e-12), f"{method} iter {a.k}: |p| > delta")
                cauchy = 0.5 * gn * min(a.delta, gn / a.B_fro)
                v.check(a.predicted_reduction >= cauchy * (1 - 1e-12), f"{method} iter {a.k}: Cauchy bound")
                if not a.accepted:
                    after = res.x if nxt is None else nxt.x
                    v.check(np.array_equal(after, a.x), f"{method} iter {a.k}: rejected step moved x")
    sol = dogleg(np.array([3.0, 3.0]), np.eye(2), 1.0)
    v.check(np.abs(sol.p - np.full(2, -np.sqrt(0.5))).max() <= 1e-12, f"dogleg example {sol.p}")
    print(f"\n{n} trust-region steps audited")
    v.finish()


@pytest.mark.criterion(8, "Gradient oracle")
def test_criterion_8_gradient_oracle():
    v = Verdict(8)
    worst = 0.0
    for arch in ((1, 16, 1), (1, 8, 8, 1), (1, 16, 16, 1)):
        for make in (lambda a: regression_problem(arch=a), lambda a: poisson_pinnlite(arch=a)):
            prob = make(arch)
            rng = np.random.default_rng(sum(arch) + prob.dim)
            for _ in range(20):
                err = grad_check(prob, rng.uniform(-1, 1, prob.dim), h=1e-6)
                worst = max(worst, err)
                v.check(err <= 1e-6, f"{type(prob).__name__} {arch}: {err:.2e}")
    print(f"\nworst relative gradient error {worst:.2e}")
    v.finish()


@pytest.mark.criterion(9, "PINN-lite outcome")
def test_criterion_9_pinnlite():
    v = Verdict(9)
    prob = poisson_pinnlite(seed=7)
    t0 = time.perf_counter()
    res = minimize(prob, prob.x0, method="ssbroyden", criteria=ConvergenceCriteria(max_iters=2000))
    elapsed = time.perf_counter() - t0
    err = prob.relative_l2_error(res.x)
    print(f"\nseed 7 ssbroyden: {res.status} after {res.iterations} iterations, rel L2 {err:.3e}, {elapsed:.1f} s")
    v.check(err <= 1e-3, f"relative L2 error {err:.3e}")
    v.check(elapsed < 60.0, f"took {elapsed:.1f} s")

    budget = ConvergenceCriteria(gtol=0.0, max_iters=2000)
    wins = 0
    for seed in (7, 13, 42):
        losses = {}
        for method in ("ssbroyden", "bfgs"):
            p = poisson_pinnlite(seed=seed)
            losses[method] = minimize(p, p.x0, method=method, criteria=budget).f
        wins += losses["ssbroyden"] <= losses["bfgs"]
        print(f"seed {seed}: ssbroyden {losses['ssbroyden']:.3e}  bfgs {losses['bfgs']:.3e}")
    v.check(wins >= 2, f"ssbroyden ahead on only {wins} of 3 seeds")
    v.finish()


@pytest.mark.criterion(10, "L-BFGS equivalence")
def test_criterion_10_lbfgs_equivalence():
    v = Verdict(10)
    crit = ConvergenceCriteria(gtol=0.0, max_iters=15)
    dense = minimize(rosenbrock(5), np.full(5, 0.5), method="bfgs", criteria=crit, audit=True)
    lim = minimize(rosenbrock(5), np.full(5, 0.5), method="lbfgs", lbfgs_memory=20,
                   lbfgs_scaling="identity", criteria=crit, audit=True)
    v.check(len(dense.audits) == len(lim.audits) == 15, "run lengths")
    worst = 0.0
    for a, b in zip(dense.audits, lim.audits):
        rel = np.linalg.norm(a.p - b.p) / np.linalg.norm(a.p)
        worst = max(worst, rel)
        v.check(rel <= 1e-10, f"iter {a.k}: relative direction gap {rel:.2e}")
    # same comparison with the dense trajectory's own pairs fed to the two-loop
    hist = LBFGSHistory(20)
    for a in dense.audits:
        d = lbfgs_direction(hist, a.g, "identity")
        rel = np.linalg.norm(d - a.p) / np.linalg.norm(a.p)
        worst = max(worst, rel)
        v.check(rel <= 1e-10, f"iter {a.k}: two-loop vs dense {rel:.2e}")
        hist.push(a.alpha * a.p, a.g_new - a.g)
    print(f"\nworst relative direction gap over 15 iterations {worst:.2e}")
    v.finish()


@pytest.mark.criterion(11, "Determinism")
def test_criterion_11_determinism(tmp_path):
    v = Verdict(11)
    cases = [
        ["--problem", "rosenbrock", "--dim", "10", "--optimizer", "ssbroyden"],
        ["--problem", "poisson-pinnlite", "--optimizer", "ssbfgs", "--seed", "13", "--max-iters", "100"],
        ["--problem", "regression", "--optimizer", "adam", "--seed", "5", "--max-iters", "300"],
    ]
    for i, args in enumerate(cases):
        blobs = []
        for rep in range(2):
            path = tmp_path / f"trace{i}_{rep}.csv"
            proc = subprocess.run([sys.executable, "-m", "selfscaled", "run", *args, "--trace", str(path)],
                                  capture_output=True, text=True)
            v.check(proc.returncode == 0, f"{args}: exit {proc.returncode} {proc.stderr}")
            blobs.append(path.read_bytes() if path.exists() else b"")
        v.check(blobs[0] == blobs[1] and blobs[0], f"{args}: traces differ")
    v.finish()

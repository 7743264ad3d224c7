"""BFGS vs SSBroyden on the 1D Poisson collocation problem at a fixed budget.

    python3 scripts/pinnlite_compare.py [--seeds 7,13,42] [--iters 2000] [--out curves.csv]

Prints final loss, relative L2 error against sin(pi x) and wall time per
(seed, optimizer); --out writes the loss curves in long format
(seed,optimizer,iter,f,gnorm_l2).
"""
import argparse
import csv
import time

from selfscaled.neuralnet import poisson_pinnlite
from selfscaled.optimizers import ConvergenceCriteria, minimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="7,13,42")
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--optimizers", default="bfgs,ssbroyden")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    crit = ConvergenceCriteria(gtol=0.0, max_iters=args.iters)
    rows = []
    print(f"{'seed':>4}  {'optimizer':10s} {'status':18s} {'iters':>5}  {'final loss':>10}  {'rel L2':>9}  time")
    for seed in (int(s) for s in args.seeds.split(",")):
        for name in args.optimizers.split(","):
            prob = poisson_pinnlite(seed=seed)
            t0 = time.perf_counter()
            res = minimize(prob, prob.x0, method=name, criteria=crit)
            dt = time.perf_counter() - t0
            err = prob.relative_l2_error(res.x)
            print(f"{seed:4d}  {name:10s} {res.status:18s} {res.iterations:5d}  {res.f:10.3e}  {err:9.2e}  {dt:.1f} s")
            rows += [(seed, name, r.iter, repr(r.f), repr(r.gnorm_l2)) for r in res.trace]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "optimizer", "iter", "f", "gnorm_l2"])
            w.writerows(rows)


if __name__ == "__main__":
    main()

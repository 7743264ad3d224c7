"""Command-line front end.

    python3 -m selfscaled run --problem rosenbrock --dim 2 --optimizer bfgs --trace t.csv
    python3 -m selfscaled table --out table.csv
    python3 -m selfscaled compare --problem poisson-pinnlite --optimizers bfgs,ssbroyden

Exit codes: 0 the run finished (converged or hit the iteration cap),
1 bad usage, 2 numerical failure (non-finite values, failed line search,
inconsistent trust-region model).
"""
from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import bench
from .linesearch import LineSearchConfig
from .neuralnet import NonFiniteLoss, PoissonPinnLite
from .optimizers import AdamConfig, ConvergenceCriteria, NumericalError, OptimizerConfig, minimize
from .optimizers.driver import GLOBALIZATIONS, LS_FAILURE, METHODS
from .trustregion import ModelInconsistency

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for numerical failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown optimizer(s) {bad or text!r}; choose from {', '.join(METHODS)}")
    return names


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=bench.PROBLEMS, default="rosenbrock")
    p.add_argument("--dim", type=int, default=None, help="rosenbrock dimension (>= 2, default 2)")
    p.add_argument("--seed", type=int, default=None, help="network initialization seed")
    x0 = p.add_mutually_exclusive_group()
    x0.add_argument("--x0-fill", type=float, default=None, help="start from a constant vector")
    x0.add_argument("--x0", type=_floats, default=None, help="start from a comma-separated vector")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--globalization", choices=GLOBALIZATIONS, default="wolfe")
    p.add_argument("--gtol", type=float, default=1e-6)
    p.add_argument("--gnorm", choices=("l2", "linf"), default="l2")
    p.add_argument("--ftol", type=float, default=0.0)
    p.add_argument("--xtol", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--lbfgs-memory", type=int, default=10)
    p.add_argument("--line-search", choices=("zoom", "minpack"), default="zoom",
                   help="Wolfe step selection engine")
    p.add_argument("--initial-step", choices=("unit", "interpolate"), default="unit",
                   help="first trial step of each Wolfe search")
    p.add_argument("--lr", type=float, default=None, help="Adam learning rate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selfscaled", description="Self-scaled quasi-Newton benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one optimization run")
    _add_problem_flags(run)
    run.add_argument("--optimizer", choices=METHODS, default="bfgs")
    _add_solver_flags(run)
    run.add_argument("--trace", default=None, help="write the per-iteration trace CSV here")
    run.add_argument("--out", default=None, help="write the final parameters here, one per line")
    run.add_argument("--timing", action="store_true", help="record wall time in the trace")

    table = sub.add_parser("table", help="the Rosenbrock benchmark table")
    table.add_argument("--dims", type=_ints, default=list(bench.ROSENBROCK_DIMS))
    table.add_argument("--optimizers", type=_names, default=list(bench.TABLE_OPTIMIZERS))
    table.add_argument("--max-iters", type=int, default=bench.TABLE_CRITERIA.max_iters)
    table.add_argument("--out", default=None, help="also write the rows as CSV")

    cmp_ = sub.add_parser("compare", help="one problem under several optimizers, long-format CSV")
    _add_problem_flags(cmp_)
    cmp_.add_argument("--optimizers", type=_names, default=["bfgs", "ssbroyden"])
    _add_solver_flags(cmp_)
    cmp_.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser


def _config(args, method: str) -> OptimizerConfig:
    crit = ConvergenceCriteria(gtol=args.gtol, gnorm=args.gnorm, ftol=args.ftol,
                               xtol=args.xtol, max_iters=args.max_iters)
    ls = LineSearchConfig(method=args.line_search, initial_step=args.initial_step)
    adam = AdamConfig() if args.lr is None else AdamConfig(lr=args.lr)
    return OptimizerConfig(method=method, globalization=args.globalization, criteria=crit,
                           linesearch=ls, adam=adam, lbfgs_memory=args.lbfgs_memory)


def _problem_and_x0(args):
    if args.problem == "rosenbrock" and args.dim is not None and args.dim < 2:
        raise UsageError("rosenbrock needs --dim >= 2")
    if args.problem != "rosenbrock" and args.dim is not None:
        raise UsageError(f"--dim does not apply to {args.problem}")
    problem = bench.make_problem(args.problem, args.dim, args.seed)
    if args.x0 is not None:
        x0 = args.x0
    elif args.x0_fill is not None:
        x0 = np.full(problem.dim, args.x0_fill)
    else:
        x0 = bench.default_x0(args.problem, problem)
    if x0.shape != (problem.dim,):
        raise UsageError(f"--x0 has {x0.size} entries, {args.problem} has {problem.dim} parameters")
    return problem, x0


@contextmanager
def _open_out(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def summary_line(problem, res) -> str:
    parts = [
        f"status={res.status}",
        f"iterations={res.iterations}",
        f"f={res.f!r}",
        f"gnorm_l2={res.trace[-1].gnorm_l2!r}",
        f"n_fev={res.n_fev}",
        f"n_gev={res.n_gev}",
    ]
    if isinstance(problem, PoissonPinnLite):
        parts.append(f"rel_l2={problem.relative_l2_error(res.x)!r}")
    return " ".join(parts)


def cmd_run(args) -> int:
    problem, x0 = _problem_and_x0(args)
    try:
        cfg = _config(args, args.optimizer)
    except ValueError as exc:
        raise UsageError(str(exc))
    res = minimize(problem, x0, config=cfg)
    if args.trace:
        with _open_out(args.trace) as fh:
            bench.write_trace(res.trace, fh, timing=args.timing)
    if args.out:
        with _open_out(args.out) as fh:
            fh.writelines(f"{v!r}\n" for v in res.x.tolist())
    print(summary_line(problem, res))
    return EXIT_NUMERICAL if res.status == LS_FAILURE else EXIT_OK


def cmd_table(args) -> int:
    if any(d < 2 for d in args.dims):
        raise UsageError("rosenbrock needs dimensions >= 2")
    rows = bench.table_rosenbrock(args.dims, args.optimizers, args.max_iters)
    print(bench.format_table(rows))
    if args.out:
        with _open_out(args.out) as fh:
            bench.write_table_csv(rows, fh)
    return EXIT_OK


def cmd_compare(args) -> int:
    problem, x0 = _problem_and_x0(args)
    try:
        cfg = _config(args, args.optimizers[0])
    except ValueError as exc:
        raise UsageError(str(exc))
    results = bench.compare(args.problem, args.optimizers, args.dim, args.seed, x0, cfg)
    with _open_out(args.out) as fh:
        bench.write_compare_csv(results, fh)
    for name, res in results.items():
        print(f"optimizer={name} " + summary_line(problem, res),
              file=sys.stderr if args.out is None else sys.stdout)
    failed = any(r.status == LS_FAILURE for r in results.values())
    return EXIT_NUMERICAL if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": cmd_run, "table": cmd_table, "compare": cmd_compare}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"selfscaled: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, NonFiniteLoss, ModelInconsistency) as exc:
        print(f"selfscaled: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

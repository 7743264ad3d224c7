"""Benchmark harness: problem registry, trace CSV I/O, the Rosenbrock table
and multi-optimizer comparisons.

Trace CSVs use the header in :data:`TRACE_HEADER`. Floats are written with
``repr`` (shortest string that round-trips), so a trace parses back to the
exact values it was written from.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .linesearch import LineSearchConfig
from .neuralnet import poisson_pinnlite, regression_problem
from .optimizers import (
    AdamConfig,
    ConvergenceCriteria,
    OptimizerConfig,
    RunResult,
    TraceRecord,
    minimize,
)
from .testfns import quadratic_xy, rosenbrock

PROBLEMS = ("rosenbrock", "quadratic-xy", "regression", "poisson-pinnlite")
TRACE_HEADER = ("iter", "f", "gnorm_l2", "gnorm_inf", "alpha", "n_fev", "n_gev", "elapsed_s", "event")
COMPARE_HEADER = ("optimizer", "iter", "f", "gnorm_l2")

# Rosenbrock table protocol: start at 0.5 everywhere, stop when the largest
# gradient component drops below 1e-6 or after 5000 iterations, H0 = I.
ROSENBROCK_DIMS = (2, 5, 10, 20)
TABLE_OPTIMIZERS = ("gd", "adam", "bfgs", "ssbfgs", "ssbroyden")
TABLE_X0_FILL = 0.5
TABLE_CRITERIA = ConvergenceCriteria(gtol=1e-6, gnorm="linf", max_iters=5000)
# MINPACK step selection and a first trial step fitted to the last decrease
TABLE_LINESEARCH = LineSearchConfig(method="minpack", initial_step="interpolate")
TABLE_ADAM = AdamConfig(lr=1e-2)

LABELS = {
    "gd": "Gradient Descent",
    "adam": "Adam",
    "bfgs": "BFGS with Wolfe",
    "ssbfgs": "SSBFGS with Wolfe",
    "ssbroyden": "SSBroyden with Wolfe",
    "lbfgs": "L-BFGS with Wolfe",
}


def make_problem(name: str, dim: Optional[int] = None, seed: Optional[int] = None):
    """Build a problem by CLI name. ``seed`` only matters for the networks."""
    if name == "rosenbrock":
        return rosenbrock(2 if dim is None else dim)
    if name == "quadratic-xy":
        if dim not in (None, 2):
            raise ValueError("quadratic-xy is two-dimensional")
        return quadratic_xy()
    if name == "regression":
        return regression_problem() if seed is None else regression_problem(seed=seed)
    if name == "poisson-pinnlite":
        return poisson_pinnlite() if seed is None else poisson_pinnlite(seed=seed)
    raise ValueError(f"unknown problem {name!r}")


def default_x0(name: str, problem) -> np.ndarray:
    if name == "rosenbrock":
        return np.full(problem.dim, TABLE_X0_FILL)
    if name == "quadratic-xy":
        return np.ones(2)
    return problem.x0.copy()


# -- trace CSV ----------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_trace(trace: Iterable[TraceRecord], fh: TextIO, timing: bool = False) -> None:
    """Write one CSV row per record.

    ``elapsed_s`` is written as 0 unless ``timing`` is set, so that identical
    runs give identical files.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in trace:
        w.writerow([
            r.iter, _fmt(r.f), _fmt(r.gnorm_l2), _fmt(r.gnorm_inf), _fmt(r.alpha),
            r.n_fev, r.n_gev, _fmt(r.elapsed_s if timing else 0.0), r.event,
        ])


def read_trace(fh: TextIO) -> list[TraceRecord]:
    reader = csv.reader(fh)
    header = tuple(next(reader))
    if header != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {header!r}")
    out = []
    for row in reader:
        it, f, gl2, ginf, alpha, nfev, ngev, el, event = row
        out.append(TraceRecord(int(it), float(f), float(gl2), float(ginf), float(alpha),
                               int(nfev), int(ngev), float(el), event))
    return out


def trace_csv(trace: Iterable[TraceRecord], timing: bool = False) -> str:
    buf = io.StringIO()
    write_trace(trace, buf, timing)
    return buf.getvalue()


# -- Rosenbrock table ---------------------------------------------------------


@dataclass
class BenchRow:
    dimension: int
    optimizer: str
    label: str
    iterations: int
    final_loss: float
    params: np.ndarray
    status: str
    result: Optional[RunResult] = None

    def params_summary(self, k: int = 2) -> str:
        p = self.params
        if p.size == 0:
            return "[]"
        if p.size <= 2 * k + 1:
            return "[" + ", ".join(f"{v:.4f}" for v in p) + "]"
        head = ", ".join(f"{v:.4f}" for v in p[:k])
        tail = ", ".join(f"{v:.4f}" for v in p[-k:])
        return f"[{head}, ..., {tail}]"


def table_config(optimizer: str, max_iters: int = TABLE_CRITERIA.max_iters) -> OptimizerConfig:
    """Optimizer settings used for one row of the Rosenbrock table."""
    globalization = "backtracking" if optimizer == "gd" else "wolfe"
    return OptimizerConfig(
        method=optimizer,
        globalization=globalization,
        criteria=replace(TABLE_CRITERIA, max_iters=max_iters),
        linesearch=TABLE_LINESEARCH,
        adam=TABLE_ADAM,
    )


def run_table_row(dim: int, optimizer: str, max_iters: int = TABLE_CRITERIA.max_iters,
                  audit: bool = False) -> BenchRow:
    problem = rosenbrock(dim)
    x0 = np.full(dim, TABLE_X0_FILL)
    label = LABELS.get(optimizer, optimizer)
    try:
        res = minimize(problem, x0, config=table_config(optimizer, max_iters), audit=audit)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return BenchRow(dim, optimizer, label, 0, math.nan, np.full(dim, math.nan),
                        f"Error: {type(exc).__name__}")
    return BenchRow(dim, optimizer, label, res.iterations, res.f, res.x, res.status, res)


def table_rosenbrock(dims: Sequence[int] = ROSENBROCK_DIMS,
                     optimizers: Sequence[str] = TABLE_OPTIMIZERS,
                     max_iters: int = TABLE_CRITERIA.max_iters,
                     audit: bool = False) -> list[BenchRow]:
    """One row per (dimension, optimizer), in that nesting order.

    A run that raises is recorded with an ``Error: ...`` status instead of
    aborting the table.
    """
    return [run_table_row(d, o, max_iters, audit) for d in dims for o in optimizers]


def format_table(rows: Sequence[BenchRow]) -> str:
    head = ("Dimension", "Optimizer, Line-search", "Iterations", "Optimized parameters", "Final Loss", "Status")
    body = [
        (str(r.dimension), r.label, str(r.iterations), r.params_summary(), f"{r.final_loss:.2e}", r.status)
        for r in rows
    ]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip() for b in body]
    return "\n".join(lines)


def write_table_csv(rows: Sequence[BenchRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["dimension", "optimizer", "label", "iterations", "final_loss", "x_first", "x_last", "status"])
    for r in rows:
        w.writerow([r.dimension, r.optimizer, r.label, r.iterations, _fmt(r.final_loss),
                    _fmt(r.params[0]), _fmt(r.params[-1]), r.status])


# -- comparisons --------------------------------------------------------------


def compare(problem_name: str, optimizers: Sequence[str], dim: Optional[int] = None,
            seed: Optional[int] = None, x0: Optional[np.ndarray] = None,
            config: Optional[OptimizerConfig] = None) -> dict[str, RunResult]:
    """Run the same problem (fresh instance, same seed) under each optimizer."""
    base = config or OptimizerConfig()
    out = {}
    for name in optimizers:
        problem = make_problem(problem_name, dim, seed)
        start = default_x0(problem_name, problem) if x0 is None else np.asarray(x0, dtype=float)
        glob = base.globalization
        if name not in ("bfgs", "ssbfgs", "ssbroyden") and glob == "trust-region":
            glob = "wolfe"
        out[name] = minimize(problem, start, config=replace(base, method=name, globalization=glob))
    return out


def write_compare_csv(results: dict[str, RunResult], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COMPARE_HEADER)
    for name, res in results.items():
        for r in res.trace:
            w.writerow([name, r.iter, _fmt(r.f), _fmt(r.gnorm_l2)])

"""The iteration loop shared by every method/globalization combination."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..linalg import norm2, norm_inf, spd_factor
from ..linesearch import LineSearchConfig, Restriction, Status, backtracking, wolfe_search
from ..trustregion import TrustRegionConfig, powell_damping, tr_step
from .first_order import AdamConfig, AdamState, adam_step
from .lbfgs import LBFGSHistory, lbfgs_direction
from .updates import (
    bfgs_inverse_update,
    has_curvature,
    scaling_chain,
    ssbfgs_quantities,
    ssbroyden_direct_update,
    ssbroyden_inverse_update,
)

METHODS = ("gd", "adam", "bfgs", "ssbfgs", "ssbroyden", "lbfgs")
GLOBALIZATIONS = ("wolfe", "backtracking", "trust-region")
DENSE_QN = ("bfgs", "ssbfgs", "ssbroyden")

GRAD_TOL = "GradTol"
F_TOL = "FTol"
X_TOL = "XTol"
MAX_ITERS = "MaxIters"
LS_FAILURE = "LineSearchFailure"


class NumericalError(FloatingPointError):
    """Objective or gradient became non-finite at some iterate."""

    def __init__(self, message: str, x: np.ndarray):
        super().__init__(message)
        self.x = x


@dataclass(frozen=True)
class ConvergenceCriteria:
    """Stopping rules. Zero disables ``ftol``/``xtol``."""

    gtol: float = 1e-6
    gnorm: str = "l2"
    ftol: float = 0.0
    xtol: float = 0.0
    max_iters: int = 5000

    def __post_init__(self):
        if min(self.gtol, self.ftol, self.xtol) < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gnorm not in ("l2", "linf"):
            raise ValueError(f"unknown gradient norm {self.gnorm!r}")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "bfgs"
    globalization: str = "wolfe"
    criteria: ConvergenceCriteria = ConvergenceCriteria()
    linesearch: LineSearchConfig = LineSearchConfig()
    trust_region: TrustRegionConfig = TrustRegionConfig()
    adam: AdamConfig = AdamConfig()
    lbfgs_memory: int = 10
    lbfgs_scaling: str = "gamma"
    # force the Broyden parameter / scaling instead of the automatic chain
    theta_override: Optional[float] = None
    tau_override: Optional[float] = None
    # line-search mode normally never forms B; this keeps it for cross-checks
    track_B: bool = False
    # keep a StepAudit per iteration (costs an SPD factorization per update)
    audit: bool = False
    dtype: str = "float64"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.globalization not in GLOBALIZATIONS:
            raise ValueError(f"unknown globalization {self.globalization!r}")
        if self.globalization == "trust-region" and self.method not in DENSE_QN:
            raise ValueError(f"trust-region needs a dense quasi-Newton method, not {self.method!r}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")


@dataclass
class TraceRecord:
    iter: int
    f: float
    gnorm_l2: float
    gnorm_inf: float
    alpha: float
    n_fev: int
    n_gev: int
    elapsed_s: float
    event: str = "normal"


@dataclass
class StepAudit:
    """What happened in one iteration, enough to re-check it independently."""

    k: int
    x: np.ndarray
    f: float
    g: np.ndarray
    p: Optional[np.ndarray] = None
    alpha: Optional[float] = None
    ls_status: Optional[str] = None
    f_new: Optional[float] = None
    g_new: Optional[np.ndarray] = None
    accepted: bool = True
    # trust region
    delta: Optional[float] = None
    predicted_reduction: Optional[float] = None
    subproblem: Optional[str] = None
    B_fro: Optional[float] = None
    # Hessian update
    updated: bool = False
    secant_residual: Optional[float] = None
    s_norm: Optional[float] = None
    spd_ok: Optional[bool] = None
    sBs_implicit: Optional[float] = None
    sBs_explicit: Optional[float] = None
    theta: Optional[float] = None
    tau: Optional[float] = None


@dataclass
class RunResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    status: str
    iterations: int
    n_fev: int
    n_gev: int
    trace: list[TraceRecord]
    H: Optional[np.ndarray] = None
    audits: list[StepAudit] = field(default_factory=list)
    config: Optional[OptimizerConfig] = None

    @property
    def gnorm(self) -> float:
        return norm2(self.g)

    def first_iter_below(self, level: float) -> Optional[int]:
        for rec in self.trace:
            if rec.f <= level:
                return rec.iter
        return None


def _gnorm(g: np.ndarray, kind: str) -> float:
    return norm_inf(g) if kind == "linf" else norm2(g)


class _Run:
    """Mutable per-run state; one instance per :func:`minimize` call."""

    def __init__(self, problem, x0, cfg: OptimizerConfig):
        self.problem = problem
        self.cfg = cfg
        self.dtype = np.dtype(cfg.dtype)
        n = x0.shape[0]
        self.n = n
        self.x = np.array(x0, dtype=self.dtype)
        self.t0 = time.perf_counter()
        self.k = 0
        f, g = problem.eval_fg(self.x)
        self.f, self.g = f, self._cast(g)
        self._check_finite(self.x)
        self.H = np.eye(n, dtype=self.dtype) if cfg.method in DENSE_QN else None
        need_B = cfg.method in DENSE_QN and (cfg.globalization == "trust-region" or cfg.track_B)
        self.B = np.eye(n, dtype=self.dtype) if need_B else None
        self.history = LBFGSHistory(cfg.lbfgs_memory) if cfg.method == "lbfgs" else None
        self.adam = AdamState.zeros(n) if cfg.method == "adam" else None
        self.delta = cfg.trust_region.delta0
        self.trace: list[TraceRecord] = []
        self.audits: list[StepAudit] = []
        self.record(0.0, "normal")

    def _cast(self, v):
        return np.asarray(v, dtype=self.dtype)

    def _check_finite(self, x):
        if not math.isfinite(self.f) or not np.all(np.isfinite(self.g)):
            raise NumericalError(
                f"non-finite objective/gradient at iteration {self.k}: f={self.f!r}, x={x!r}", x
            )

    def record(self, alpha: float, event: str) -> None:
        self.trace.append(
            TraceRecord(
                self.k, self.f, norm2(self.g), norm_inf(self.g), float(alpha),
                self.problem.n_fev, self.problem.n_gev, time.perf_counter() - self.t0, event,
            )
        )

    # -- Hessian approximation -------------------------------------------

    def quantities(self, s, y, sBs):
        cfg = self.cfg
        ys = float(np.dot(y, s))
        yHy = float(np.dot(y, self.H @ y))
        overrides = dict(theta=cfg.theta_override, tau=cfg.tau_override)
        if cfg.method == "bfgs":
            return scaling_chain(ys, sBs, yHy, self.n, theta=0.0, tau=1.0)
        if cfg.method == "ssbfgs":
            q = ssbfgs_quantities(ys, sBs, yHy, self.n)
            if cfg.tau_override is not None:
                q.tau = cfg.tau_override
            return q
        return scaling_chain(ys, sBs, yHy, self.n, **overrides)

    def update_dense(self, s, y, sBs_implicit, audit: Optional[StepAudit]) -> list[str]:
        """Apply the method's update to H (and B if kept). Returns trace events."""
        events = []
        if not has_curvature(s, y):
            return ["skipped_update"]
        sBs = sBs_implicit
        if self.B is not None:
            sBs_explicit = float(np.dot(s, self.B @ s))
            if audit is not None:
                audit.sBs_explicit = sBs_explicit
            if self.cfg.globalization == "trust-region":
                sBs = sBs_explicit
        q = self.quantities(s, y, sBs)
        if q.degenerate:
            events.append("degenerate_scaling")
        if self.cfg.method == "bfgs" and self.cfg.theta_override is None and self.cfg.tau_override is None:
            H_new = bfgs_inverse_update(self.H, s, y)
        else:
            H_new = ssbroyden_inverse_update(self.H, s, y, q)
        if self.B is not None:
            self.B = ssbroyden_direct_update(self.B, s, y, q)
        self.H = H_new
        if audit is not None:
            audit.updated = True
            audit.sBs_implicit = sBs_implicit
            audit.theta, audit.tau = q.theta, q.tau
            audit.secant_residual = norm2(self.H @ y - s)
            audit.s_norm = norm2(s)
            audit.spd_ok = spd_factor(self.H) is not None
        return events

    # -- one iteration per globalization ----------------------------------

    def direction(self) -> np.ndarray:
        m = self.cfg.method
        if m in DENSE_QN:
            return -(self.H @ self.g)
        if m == "lbfgs":
            return lbfgs_direction(self.history, self.g, self.cfg.lbfgs_scaling)
        return -self.g

    def line_search_step(self) -> Optional[str]:
        """Returns a terminal status, or None to keep iterating."""
        cfg = self.cfg
        events = []
        p = self.direction()
        slope = float(np.dot(self.g, p))
        if not slope < 0.0 and cfg.method in ("bfgs", "ssbfgs", "ssbroyden", "lbfgs"):
            # approximation lost positive definiteness: restart from steepest descent
            if self.H is not None:
                self.H = np.eye(self.n, dtype=self.dtype)
                if self.B is not None:
                    self.B = np.eye(self.n, dtype=self.dtype)
            if self.history is not None:
                self.history.pairs.clear()
            p = -self.g
            slope = float(np.dot(self.g, p))
            events.append("fallback")

        line = Restriction(self.problem, self.x, p)
        if cfg.globalization == "wolfe":
            # before the first move, pretend the last decrease was ||g|| / 2
            f_prev = self.f_prev if self.k > 0 else self.f + 0.5 * norm2(self.g)
            out = wolfe_search(line, self.f, slope, cfg.linesearch, f_prev)
        else:
            out = backtracking(line.value, self.f, slope, cfg.linesearch, grad=line.gradient)

        audit = None
        if cfg.audit:
            audit = StepAudit(self.k, self.x.copy(), self.f, self.g.copy(), p.copy(),
                              out.alpha, out.status.value, out.f_new)
            self.audits.append(audit)

        if out.status is Status.NON_DESCENT:
            return GRAD_TOL if norm2(self.g) == 0.0 else LS_FAILURE
        if out.alpha is None:
            return LS_FAILURE
        if out.status is Status.MAX_TRIALS:
            events.append("fallback")
        g_new = out.g_new if out.g_new is not None else line.gradient(out.alpha)

        x_new = self._cast(line.point(out.alpha))
        if np.array_equal(x_new, self.x):
            # Armijo held only through rounding: the step does not move x
            return LS_FAILURE
        g_new = self._cast(g_new)
        s = x_new - self.x
        y = g_new - self.g
        g_old = self.g
        self.x_prev, self.f_prev = self.x, self.f
        self.x, self.f, self.g = x_new, float(out.f_new), g_new
        if audit is not None:
            audit.g_new = g_new.copy()
        self._check_finite(self.x)

        if self.H is not None:
            # B s = -alpha g  =>  s^T B s = -alpha s^T g
            sBs = -out.alpha * float(np.dot(s, g_old))
            events += self.update_dense(s, y, sBs, audit)
        elif self.history is not None:
            if has_curvature(s, y):
                self.history.push(s, y)
            else:
                events.append("skipped_update")
        self.k += 1
        self.record(out.alpha, "+".join(events) or "normal")
        return None

    def trust_region_step(self) -> Optional[str]:
        cfg = self.cfg
        delta = self.delta
        step = tr_step(self.x, self.f, self.g, self.B, delta, self.problem, cfg.trust_region)
        sol = step.solution
        events = ["fallback"] if sol.kind == "cauchy_fallback" else []
        audit = None
        if cfg.audit:
            audit = StepAudit(self.k, self.x.copy(), self.f, self.g.copy(), sol.p.copy(),
                              accepted=step.accepted, delta=delta,
                              predicted_reduction=sol.predicted_reduction, subproblem=sol.kind,
                              B_fro=float(np.linalg.norm(self.B)), f_new=step.f_new)
            self.audits.append(audit)
        self.delta = step.delta_new
        if step.accepted:
            x_new = self._cast(step.x_new)
            g_new = self._cast(self.problem.eval_grad(x_new))
            s = x_new - self.x
            y = g_new - self.g
            self.x_prev, self.f_prev = self.x, self.f
            self.x, self.f, self.g = x_new, float(step.f_new), g_new
            if audit is not None:
                audit.g_new = g_new.copy()
            self._check_finite(self.x)
            Bs = self.B @ s
            y_used, w = powell_damping(s, y, Bs)
            if w != 1.0:
                events.append("damped")
            events += self.update_dense(s, y_used, float(np.dot(s, Bs)), audit)
        else:
            events.append("rejected")
        self.k += 1
        self.record(delta, "+".join(events) or "normal")
        if self.delta < 1e-15 * max(1.0, norm2(self.x)):
            # radius collapsed below resolvable step size
            return X_TOL
        return None

    def adam_step(self) -> None:
        self.adam, x_new, lr = adam_step(self.adam, self.x, self.g, self.cfg.adam)
        self.x_prev, self.f_prev = self.x, self.f
        self.x = self._cast(x_new)
        f, g = self.problem.eval_fg(self.x)
        self.f, self.g = f, self._cast(g)
        self._check_finite(self.x)
        self.k += 1
        self.record(lr, "normal")

    # -- loop ---------------------------------------------------------------

    def converged(self, moved: bool) -> Optional[str]:
        c = self.cfg.criteria
        if _gnorm(self.g, c.gnorm) <= c.gtol:
            return GRAD_TOL
        if moved and self.k > 0:
            if c.ftol > 0 and abs(self.f - self.f_prev) <= c.ftol:
                return F_TOL
            if c.xtol > 0 and norm2(self.x - self.x_prev) <= c.xtol:
                return X_TOL
        return None

    def run(self) -> str:
        moved = False
        while True:
            status = self.converged(moved)
            if status:
                return status
            if self.k >= self.cfg.criteria.max_iters:
                return MAX_ITERS
            n_before = len(self.trace)
            x_before = self.x
            if self.cfg.method == "adam":
                status = self.adam_step()
            elif self.cfg.globalization == "trust-region":
                status = self.trust_region_step()
            else:
                status = self.line_search_step()
            if status:
                return status
            moved = len(self.trace) > n_before and self.x is not x_before


def minimize(problem, x0, method: Optional[str] = None, globalization: Optional[str] = None,
             criteria: Optional[ConvergenceCriteria] = None,
             config: Optional[OptimizerConfig] = None, **overrides) -> RunResult:
    """Minimize ``problem`` from ``x0``.

    ``method`` is one of gd, adam, bfgs, ssbfgs, ssbroyden, lbfgs;
    ``globalization`` one of wolfe, backtracking, trust-region (adam ignores
    it). Both default to the values in ``config`` (bfgs + wolfe).
    ``config`` supplies everything else; keyword ``overrides`` are applied
    on top of it (e.g. ``audit=True``).

    Dense quasi-Newton methods start from ``H_0 = I``. Raises
    :class:`NumericalError` if ``f`` or its gradient turns non-finite.
    """
    cfg = config or OptimizerConfig()
    fields = dict(overrides)
    if method is not None:
        fields["method"] = method
    if globalization is not None:
        fields["globalization"] = globalization
    if criteria is not None:
        fields["criteria"] = criteria
    cfg = replace(cfg, **fields)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, problem dimension is {problem.dim}")
    state = _Run(problem, x0, cfg)
    status = state.run()
    return RunResult(
        x=state.x, f=state.f, g=state.g, status=status, iterations=state.k,
        n_fev=problem.n_fev, n_gev=problem.n_gev, trace=state.trace, H=state.H,
        audits=state.audits, config=cfg,
    )

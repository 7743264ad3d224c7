"""Step-length selection along a fixed direction.

Both searches work on the 1-D restriction ``phi(alpha) = f(x + alpha p)``.
The Wolfe search takes an oracle returning ``(phi, dphi, payload)`` where
``payload`` is passed through untouched (the optimizers use it to carry the
full gradient at the trial point); backtracking only needs ``phi``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.optimize._dcsrch import DCSRCH


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_TRIALS = "MaxTrials"
    NON_DESCENT = "NonDescent"


@dataclass(frozen=True)
class LineSearchConfig:
    c1: float = 1e-4
    c2: float = 0.9
    rho: float = 0.5
    alpha_init: float = 1.0
    max_trials: int = 50
    alpha_max: float = 1e10
    # "strong" tests |phi'(a)| <= c2 |phi'(0)|; "weak" tests phi'(a) >= c2 phi'(0)
    curvature: str = "strong"
    # "unit": first trial is alpha_init; "interpolate": min(alpha_init,
    # 1.01 * 2 (f_k - f_{k-1}) / phi'(0)), a quadratic fit to the last decrease
    initial_step: str = "unit"
    # Wolfe search engine: "zoom" (strong_wolfe below) or "minpack"
    # (More-Thuente safeguarded steps, via scipy)
    method: str = "zoom"

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"need 0 < rho < 1, got {self.rho}")
        if self.curvature not in ("strong", "weak"):
            raise ValueError(f"unknown curvature test {self.curvature!r}")
        if self.initial_step not in ("unit", "interpolate"):
            raise ValueError(f"unknown initial step rule {self.initial_step!r}")
        if self.method not in ("zoom", "minpack"):
            raise ValueError(f"unknown Wolfe search {self.method!r}")


def initial_step(cfg: LineSearchConfig, dphi0: float, f: float, f_prev: float | None) -> float:
    """First trial step for a search starting at value ``f`` with slope ``dphi0``.

    With ``initial_step="interpolate"`` the step that would have reproduced
    the previous decrease ``f_prev - f`` on a quadratic; ``f_prev`` is None
    on the first iteration, which is then treated as a drop of ``||g|| / 2``
    by the caller passing ``f + ||g|| / 2``.
    """
    if cfg.initial_step == "unit" or f_prev is None or not dphi0 < 0.0:
        return cfg.alpha_init
    guess = 1.01 * 2.0 * (f - f_prev) / dphi0
    if not guess > 0.0 or not math.isfinite(guess):
        return cfg.alpha_init
    return min(cfg.alpha_init, guess)


@dataclass
class Trial:
    alpha: float
    phi: float
    dphi: float | None
    armijo: bool


@dataclass
class LineSearchOutcome:
    status: Status
    alpha: float | None
    f_new: float | None
    dphi_new: float | None = None
    g_new: Any = None
    n_phi_evals: int = 0
    trials: list[Trial] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def armijo_ok(phi_a: float, alpha: float, phi0: float, dphi0: float, c1: float) -> bool:
    return phi_a <= phi0 + c1 * alpha * dphi0


def curvature_ok(dphi_a: float, dphi0: float, c2: float, kind: str = "strong") -> bool:
    if kind == "strong":
        return abs(dphi_a) <= c2 * abs(dphi0)
    return dphi_a >= c2 * dphi0


def _cubic_min(a0, f0, d0, a1, f1, d1):
    """Minimizer of the cubic through two (value, slope) pairs, or None."""
    if a0 == a1:
        return None
    t1 = d0 + d1 - 3.0 * (f0 - f1) / (a0 - a1)
    disc = t1 * t1 - d0 * d1
    if not disc >= 0.0:
        return None
    t2 = math.copysign(math.sqrt(disc), a1 - a0)
    den = d1 - d0 + 2.0 * t2
    if den == 0.0:
        return None
    a = a1 - (a1 - a0) * (d1 + t2 - t1) / den
    return a if math.isfinite(a) else None


def _quad_min(a0, f0, d0, a1, f1):
    """Minimizer of the parabola through (a0, f0) with slope d0 and (a1, f1)."""
    da = a1 - a0
    den = 2.0 * (f1 - f0 - d0 * da)
    if not den > 0.0:
        return None
    a = a0 - d0 * da * da / den
    return a if math.isfinite(a) else None


def _interpolate(lo, hi) -> float:
    """Trial step inside the bracket: cubic, then quadratic, then bisection.

    ``lo``/``hi`` are Trial records. The result keeps a 10% margin from both
    ends of the bracket.
    """
    a_lo, a_hi = lo.alpha, hi.alpha
    left, right = min(a_lo, a_hi), max(a_lo, a_hi)
    margin = 0.1 * (right - left)
    cand = None
    if hi.dphi is not None:
        cand = _cubic_min(a_lo, lo.phi, lo.dphi, a_hi, hi.phi, hi.dphi)
    if cand is None or not (left + margin <= cand <= right - margin):
        cand = _quad_min(a_lo, lo.phi, lo.dphi, a_hi, hi.phi)
    if cand is None or not (left + margin <= cand <= right - margin):
        cand = 0.5 * (a_lo + a_hi)
    return cand


def strong_wolfe(
    phi: Callable[[float], tuple[float, float, Any]],
    phi0: float,
    dphi0: float,
    cfg: LineSearchConfig = LineSearchConfig(),
    alpha0: float | None = None,
) -> LineSearchOutcome:
    """Bracket-then-zoom search for a step meeting the (strong) Wolfe conditions.

    ``phi(alpha)`` must return ``(phi(alpha), phi'(alpha), payload)``. On
    ``MaxTrials`` the outcome carries the lowest Armijo-satisfying trial seen,
    if any, so the caller can decide whether to take it.
    """
    if not dphi0 < 0.0:
        return LineSearchOutcome(Status.NON_DESCENT, None, None)

    trials: list[Trial] = []
    payloads: list[Any] = []
    c1, c2 = cfg.c1, cfg.c2

    def evaluate(alpha: float) -> Trial:
        val, slope, payload = phi(alpha)
        t = Trial(alpha, float(val), float(slope), armijo_ok(val, alpha, phi0, dphi0, c1))
        trials.append(t)
        payloads.append(payload)
        return t

    def done(t: Trial) -> LineSearchOutcome:
        return LineSearchOutcome(
            Status.CONVERGED, t.alpha, t.phi, t.dphi, payloads[trials.index(t)],
            len(trials), trials,
        )

    def give_up() -> LineSearchOutcome:
        ok = [i for i, t in enumerate(trials) if t.armijo and math.isfinite(t.phi)]
        if not ok:
            return LineSearchOutcome(Status.MAX_TRIALS, None, None, n_phi_evals=len(trials), trials=trials)
        best = min(ok, key=lambda i: trials[i].phi)
        t = trials[best]
        return LineSearchOutcome(
            Status.MAX_TRIALS, t.alpha, t.phi, t.dphi, payloads[best], len(trials), trials
        )

    def zoom(lo: Trial, hi: Trial) -> LineSearchOutcome:
        while len(trials) < cfg.max_trials:
            if abs(hi.alpha - lo.alpha) <= 1e-16 * max(1.0, abs(lo.alpha)):
                break
            t = evaluate(_interpolate(lo, hi))
            if not t.armijo or t.phi >= lo.phi:
                hi = t
                continue
            if curvature_ok(t.dphi, dphi0, c2, cfg.curvature):
                return done(t)
            if t.dphi * (hi.alpha - lo.alpha) >= 0.0:
                hi = lo
            lo = t
        return give_up()

    prev = Trial(0.0, phi0, dphi0, True)
    alpha = cfg.alpha_init if alpha0 is None else alpha0
    while len(trials) < cfg.max_trials:
        t = evaluate(alpha)
        if not math.isfinite(t.phi) or not math.isfinite(t.dphi):
            # overshoot into a non-finite region: treat like an Armijo failure
            t.armijo = False
            t.phi = math.inf
            t.dphi = None
            return zoom(prev, t)
        if not t.armijo or (len(trials) > 1 and t.phi >= prev.phi):
            return zoom(prev, t)
        if curvature_ok(t.dphi, dphi0, c2, cfg.curvature):
            return done(t)
        if t.dphi >= 0.0:
            return zoom(t, prev)
        if alpha >= cfg.alpha_max:
            break
        prev = t
        alpha = min(2.0 * alpha, cfg.alpha_max)
    return give_up()


def minpack_wolfe(
    phi: Callable[[float], tuple[float, float, Any]],
    phi0: float,
    dphi0: float,
    cfg: LineSearchConfig = LineSearchConfig(),
    alpha0: float | None = None,
) -> LineSearchOutcome:
    """Strong Wolfe search with MINPACK's safeguarded step selection.

    Same oracle and outcome types as :func:`strong_wolfe`. When MINPACK
    gives up, the zoom search is run from scratch on the same oracle.
    """
    if not dphi0 < 0.0:
        return LineSearchOutcome(Status.NON_DESCENT, None, None)
    trials: list[Trial] = []
    seen: dict[float, tuple[float, float, Any]] = {}

    def fetch(alpha: float):
        if alpha not in seen:
            val, slope, payload = phi(alpha)
            seen[alpha] = (float(val), float(slope), payload)
            trials.append(Trial(alpha, float(val), float(slope), armijo_ok(val, alpha, phi0, dphi0, cfg.c1)))
        return seen[alpha]

    a1 = cfg.alpha_init if alpha0 is None else alpha0
    dcsrch = DCSRCH(lambda a: fetch(a)[0], lambda a: fetch(a)[1], cfg.c1, cfg.c2, 1e-14, 1e-100, cfg.alpha_max)
    with np.errstate(all="ignore"):
        stp, _, _, task = dcsrch(a1, phi0=phi0, derphi0=dphi0, maxiter=cfg.max_trials)
    if stp is not None and task.startswith(b"CONVERGENCE") and stp in seen:
        val, slope, payload = seen[stp]
        return LineSearchOutcome(Status.CONVERGED, stp, val, slope, payload, len(trials), trials)
    out = strong_wolfe(phi, phi0, dphi0, cfg)
    out.trials = trials + out.trials
    out.n_phi_evals = len(out.trials)
    return out


def wolfe_search(
    phi: Callable[[float], tuple[float, float, Any]],
    phi0: float,
    dphi0: float,
    cfg: LineSearchConfig = LineSearchConfig(),
    phi_prev: float | None = None,
) -> LineSearchOutcome:
    """Dispatch on ``cfg.method``; ``phi_prev`` feeds the initial step rule."""
    alpha0 = initial_step(cfg, dphi0, phi0, phi_prev)
    if cfg.method == "minpack":
        return minpack_wolfe(phi, phi0, dphi0, cfg, alpha0)
    return strong_wolfe(phi, phi0, dphi0, cfg, alpha0)


def backtracking(
    phi: Callable[[float], float],
    phi0: float,
    slope0: float,
    cfg: LineSearchConfig = LineSearchConfig(),
    grad: Callable[[float], Any] | None = None,
) -> LineSearchOutcome:
    """Armijo backtracking: try ``alpha_init * rho**j`` for ``j = 0, 1, ...``.

    ``slope0 = p^T grad f(x)`` must be negative. ``grad``, if given, is
    called once at the accepted step and its result stored in ``g_new``.
    """
    if not slope0 < 0.0:
        return LineSearchOutcome(Status.NON_DESCENT, None, None)
    trials: list[Trial] = []
    alpha = cfg.alpha_init
    for _ in range(cfg.max_trials):
        val = float(phi(alpha))
        ok = math.isfinite(val) and armijo_ok(val, alpha, phi0, slope0, cfg.c1)
        trials.append(Trial(alpha, val, None, ok))
        if ok:
            g_new = grad(alpha) if grad is not None else None
            return LineSearchOutcome(Status.CONVERGED, alpha, val, None, g_new, len(trials), trials)
        alpha *= cfg.rho
    return LineSearchOutcome(Status.MAX_TRIALS, None, None, n_phi_evals=len(trials), trials=trials)


class Restriction:
    """``phi(alpha) = f(x + alpha p)`` over an ObjectiveProblem.

    Calling the instance evaluates value and gradient together and returns
    ``(phi, phi', g)`` as the Wolfe search expects; :meth:`value` evaluates
    ``f`` alone for backtracking.
    """

    def __init__(self, problem, x: np.ndarray, p: np.ndarray):
        self.problem = problem
        self.x = x
        self.p = p

    def point(self, alpha: float) -> np.ndarray:
        return self.x + alpha * self.p

    def __call__(self, alpha: float):
        f, g = self.problem.eval_fg(self.point(alpha))
        return f, float(np.dot(g, self.p)), g

    def value(self, alpha: float) -> float:
        return self.problem.eval_f(self.point(alpha))

    def gradient(self, alpha: float) -> np.ndarray:
        return self.problem.eval_grad(self.point(alpha))

"""Dogleg trust-region steps over a dense quasi-Newton model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import norm2, spd_factor, spd_solve


class ModelInconsistency(RuntimeError):
    """The quadratic model predicts no decrease along a step with g != 0."""


@dataclass(frozen=True)
class TrustRegionConfig:
    delta0: float = 1.0
    delta_max: float = 100.0
    eta_accept: float = 1e-4
    low: float = 0.25
    high: float = 0.75
    shrink: float = 0.25
    grow: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.eta_accept <= self.low < self.high < 1.0:
            raise ValueError("need 0 < eta_accept <= low < high < 1")
        if not 0.0 < self.shrink < 1.0 < self.grow:
            raise ValueError("need 0 < shrink < 1 < grow")
        if not 0.0 < self.delta0 <= self.delta_max:
            raise ValueError("need 0 < delta0 <= delta_max")


@dataclass
class SubproblemSolution:
    p: np.ndarray
    predicted_reduction: float
    on_boundary: bool
    # "stationary", "newton", "cauchy", "dogleg" or "cauchy_fallback" (B not SPD)
    kind: str


def model_reduction(g: np.ndarray, B: np.ndarray, p: np.ndarray) -> float:
    """``m(0) - m(p)`` for ``m(p) = g^T p + p^T B p / 2``."""
    return -(float(np.dot(g, p)) + 0.5 * float(np.dot(p, B @ p)))


def _clip(p: np.ndarray, delta: float) -> np.ndarray:
    n = norm2(p)
    return p * (delta / n) if n > delta else p


def cauchy_point(g: np.ndarray, B: np.ndarray, delta: float) -> np.ndarray:
    gn = norm2(g)
    gBg = float(np.dot(g, B @ g))
    tau = 1.0 if gBg <= 0.0 else min(1.0, gn**3 / (delta * gBg))
    return _clip(-(tau * delta / gn) * g, delta)


def dogleg(g: np.ndarray, B: np.ndarray, delta: float) -> SubproblemSolution:
    """Approximate minimizer of the quadratic model inside ``||p|| <= delta``.

    Full step ``-B^{-1} g`` when it fits; otherwise the point where the
    dogleg path (origin -> unconstrained Cauchy point -> full step) crosses
    the boundary. If ``B`` fails the SPD factorization the Cauchy point
    along ``-g`` is used instead.
    """
    gn = norm2(g)
    if gn == 0.0:
        return SubproblemSolution(np.zeros_like(g), 0.0, False, "stationary")

    L = spd_factor(B)
    if L is None:
        p = cauchy_point(g, B, delta)
        return SubproblemSolution(p, model_reduction(g, B, p), norm2(p) >= delta * (1 - 1e-12),
                                  "cauchy_fallback")

    pb = -spd_solve(L, g)
    if norm2(pb) <= delta:
        # exact model decrease at the minimizer: -g^T pb / 2
        return SubproblemSolution(pb, -0.5 * float(np.dot(g, pb)), False, "newton")

    gBg = float(np.dot(g, B @ g))
    pu = -(gn * gn / gBg) * g
    pun = norm2(pu)
    if pun >= delta:
        p = _clip(-(delta / gn) * g, delta)
        return SubproblemSolution(p, model_reduction(g, B, p), True, "cauchy")

    # ||pu + t d|| = delta for t in [0, 1]
    d = pb - pu
    a = float(np.dot(d, d))
    b = 2.0 * float(np.dot(pu, d))
    c = pun * pun - delta * delta
    t = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    p = _clip(pu + min(max(t, 0.0), 1.0) * d, delta)
    return SubproblemSolution(p, model_reduction(g, B, p), True, "dogleg")


@dataclass
class TrustRegionStep:
    accepted: bool
    x_new: np.ndarray
    f_new: float
    delta_new: float
    ratio: float
    solution: SubproblemSolution


def update_radius(delta: float, ratio: float, on_boundary: bool, cfg: TrustRegionConfig) -> float:
    if ratio < cfg.low:
        return cfg.shrink * delta
    if ratio > cfg.high and on_boundary:
        return min(cfg.grow * delta, cfg.delta_max)
    return delta


def tr_step(x, f, g, B, delta, problem, cfg: TrustRegionConfig = TrustRegionConfig()) -> TrustRegionStep:
    """Solve the subproblem, evaluate ``f`` once at the trial point and decide.

    Rejected steps return ``x`` itself (same object) and ``f`` unchanged.
    """
    sol = dogleg(g, B, delta)
    if sol.kind == "stationary":
        return TrustRegionStep(False, x, f, delta, 0.0, sol)
    pred = sol.predicted_reduction
    if not pred > 0.0:
        raise ModelInconsistency(f"predicted reduction {pred!r} with ||g|| = {norm2(g)!r}")
    x_trial = x + sol.p
    f_trial = problem.eval_f(x_trial)
    ratio = (f - f_trial) / pred if math.isfinite(f_trial) else -math.inf
    delta_new = update_radius(delta, ratio, sol.on_boundary, cfg)
    if ratio >= cfg.eta_accept:
        return TrustRegionStep(True, x_trial, f_trial, delta_new, ratio, sol)
    return TrustRegionStep(False, x, f, delta_new, ratio, sol)


def powell_damping(s: np.ndarray, y: np.ndarray, Bs: np.ndarray, threshold: float = 0.2):
    """Blend ``y`` toward ``B s`` so that ``y^T s >= threshold * s^T B s``.

    Returns the (possibly) modified ``y`` and the blend weight (1.0 when no
    damping was needed).
    """
    sBs = float(np.dot(s, Bs))
    sy = float(np.dot(s, y))
    if sy >= threshold * sBs:
        return y, 1.0
    w = (1.0 - threshold) * sBs / (sBs - sy)
    return w * y + (1.0 - w) * Bs, w

"""First-order baselines: Adam and steepest descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linesearch import LineSearchConfig, Restriction, backtracking


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # staircase decay: lr * decay_rate ** ((t - 1) // decay_steps) at step t >= 1; 1.0 disables
    decay_rate: float = 1.0
    decay_steps: int = 1000


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_lr(cfg: AdamConfig, t: int) -> float:
    return cfg.lr * cfg.decay_rate ** ((t - 1) // cfg.decay_steps)


def adam_step(state: AdamState, x: np.ndarray, g: np.ndarray, cfg: AdamConfig = AdamConfig()):
    """One bias-corrected Adam step. Returns ``(new_state, new_x, lr_used)``."""
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    lr = adam_lr(cfg, t)
    x_new = x - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return AdamState(m, v, t), x_new, lr


def steepest_descent_direction(g: np.ndarray) -> np.ndarray:
    return -g


def gd_step(problem, x: np.ndarray, f: float, g: np.ndarray, cfg=None):
    """Steepest-descent step with Armijo backtracking.

    Returns ``(x_new, outcome)``; ``x_new is x`` when the search fails
    (e.g. ``NonDescent`` at a stationary point).
    """
    cfg = cfg or LineSearchConfig()
    p = steepest_descent_direction(g)
    line = Restriction(problem, x, p)
    out = backtracking(line.value, f, float(np.dot(g, p)), cfg, grad=line.gradient)
    if not out.converged:
        return x, out
    return line.point(out.alpha), out

"""Analytic benchmark objectives and the finite-difference gradient oracle."""
from __future__ import annotations

from typing import Callable

import numpy as np


class ObjectiveProblem:
    """An objective ``f`` with gradient, plus evaluation tallies.

    Subclasses implement ``_f``, ``_grad`` and optionally ``_fg`` (joint
    evaluation, which counts as one call of each). The public ``eval_*``
    methods bump ``n_fev``/``n_gev`` by exactly one per evaluation.
    """

    name = "objective"

    def __init__(self, dim: int, known_minimum: tuple[np.ndarray, float] | None = None):
        self.dim = dim
        self.known_minimum = known_minimum
        self.n_fev = 0
        self.n_gev = 0

    def eval_f(self, x: np.ndarray) -> float:
        self.n_fev += 1
        return float(self._f(np.asarray(x, dtype=np.float64)))

    def eval_grad(self, x: np.ndarray) -> np.ndarray:
        self.n_gev += 1
        return self._grad(np.asarray(x, dtype=np.float64))

    def eval_fg(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self.n_fev += 1
        self.n_gev += 1
        f, g = self._fg(np.asarray(x, dtype=np.float64))
        return float(f), g

    def reset_counters(self) -> None:
        self.n_fev = 0
        self.n_gev = 0

    def _f(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError

    def _fg(self, x):
        return self._f(x), self._grad(x)


class FunctionProblem(ObjectiveProblem):
    """Wrap plain ``f`` and ``grad`` callables."""

    def __init__(self, dim: int, f: Callable, grad: Callable, known_minimum=None, name="custom"):
        super().__init__(dim, known_minimum)
        self._fn = f
        self._gr = grad
        self.name = name

    def _f(self, x):
        return self._fn(x)

    def _grad(self, x):
        return np.asarray(self._gr(x), dtype=np.float64)


class Rosenbrock(ObjectiveProblem):
    """Chained Rosenbrock ``sum_i 100 (x_{i+1} - x_i^2)^2 + (x_i - 1)^2``."""

    name = "rosenbrock"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"rosenbrock needs n >= 2, got {n}")
        super().__init__(n, (np.ones(n), 0.0))

    def _f(self, x):
        a = x[1:] - x[:-1] ** 2
        b = x[:-1] - 1.0
        return np.sum(100.0 * a * a + b * b)

    def _grad(self, x):
        a = x[1:] - x[:-1] ** 2
        g = np.zeros_like(x)
        g[:-1] = -400.0 * x[:-1] * a + 2.0 * (x[:-1] - 1.0)
        g[1:] += 200.0 * a
        return g


def rosenbrock(n: int) -> Rosenbrock:
    return Rosenbrock(n)


class QuadraticXY(ObjectiveProblem):
    """``f(x, y) = x^2 + y^2 + x y``; Hessian ``[[2, 1], [1, 2]]``."""

    name = "quadratic-xy"
    hessian = np.array([[2.0, 1.0], [1.0, 2.0]])

    def __init__(self):
        super().__init__(2, (np.zeros(2), 0.0))

    def _f(self, x):
        return x[0] * x[0] + x[1] * x[1] + x[0] * x[1]

    def _grad(self, x):
        return np.array([2.0 * x[0] + x[1], 2.0 * x[1] + x[0]])


def quadratic_xy() -> QuadraticXY:
    return QuadraticXY()


def grad_check(p: ObjectiveProblem, x, h: float = 1e-6) -> float:
    """Max over coordinates of ``|central FD - grad_i| / (1 + |grad_i|)``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = p.eval_grad(x)
    worst = 0.0
    for i in range(x.shape[0]):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        # actual spacing, not 2h: x_i +/- h rounds
        fd = (p.eval_f(xp) - p.eval_f(xm)) / (xp[i] - xm[i])
        worst = max(worst, abs(fd - g[i]) / (1.0 + abs(g[i])))
    return worst

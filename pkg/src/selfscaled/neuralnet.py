"""Fully connected tanh networks with hand-written backprop, packaged as
objective problems over the flattened parameter vector.

Parameter layout (fixed, relied on by saved traces): layers in order; for
each layer the weight matrix of shape ``(fan_out, fan_in)`` in row-major
order, followed by its bias vector of length ``fan_out``.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .rng import SplitMix64
from .testfns import ObjectiveProblem


class NonFiniteLoss(FloatingPointError):
    """Raised when a loss term evaluates to NaN or infinity."""

    def __init__(self, term: str, value: float):
        super().__init__(f"non-finite {term} loss term: {value!r}")
        self.term = term
        self.value = value


class MLP:
    """tanh on hidden layers, identity on the output layer."""

    def __init__(self, sizes: Sequence[int]):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"invalid layer sizes {sizes}")
        self.sizes = sizes
        self.shapes = list(zip(sizes[1:], sizes[:-1]))
        self.n_params = sum(o * i + o for o, i in self.shapes)

    def unpack(self, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {params.shape}")
        layers = []
        k = 0
        for o, i in self.shapes:
            W = params[k:k + o * i].reshape(o, i)
            k += o * i
            b = params[k:k + o]
            k += o
            layers.append((W, b))
        return layers

    def forward(self, params: np.ndarray, X: np.ndarray):
        """Evaluate on inputs ``X`` of shape ``(P, fan_in)``.

        Returns the output ``(P, fan_out)`` and the activations needed by
        :meth:`backward`.
        """
        layers = self.unpack(params)
        acts = [X]
        A = X
        for idx, (W, b) in enumerate(layers):
            Z = A @ W.T + b
            A = Z if idx == len(layers) - 1 else np.tanh(Z)
            acts.append(A)
        return A, acts

    def backward(self, params: np.ndarray, acts, dout: np.ndarray) -> np.ndarray:
        """Gradient of ``sum(dout * output)`` with respect to ``params``."""
        layers = self.unpack(params)
        grads = []
        dZ = dout
        for idx in range(len(layers) - 1, -1, -1):
            W, _ = layers[idx]
            A_prev = acts[idx]
            grads.append((dZ.T @ A_prev, dZ.sum(axis=0)))
            if idx > 0:
                dA = dZ @ W
                dZ = dA * (1.0 - A_prev * A_prev)
        return _flatten(reversed(grads))

    def forward_taylor(self, params: np.ndarray, x: np.ndarray):
        """Propagate ``(u, du/dx, d2u/dx2)`` for scalar inputs ``x`` of shape ``(P,)``.

        Returns three ``(P, fan_out)`` arrays and the per-layer cache used by
        :meth:`backward_taylor`.
        """
        if self.sizes[0] != 1:
            raise ValueError("input derivatives need a scalar input layer")
        layers = self.unpack(params)
        A = x.reshape(-1, 1)
        Ax = np.ones_like(A)
        Axx = np.zeros_like(A)
        cache = []
        last = len(layers) - 1
        for idx, (W, b) in enumerate(layers):
            Z = A @ W.T + b
            Zx = Ax @ W.T
            Zxx = Axx @ W.T
            cache.append((A, Ax, Axx, Zx, Zxx))
            if idx == last:
                A, Ax, Axx = Z, Zx, Zxx
            else:
                A = np.tanh(Z)
                d1 = 1.0 - A * A
                d2 = -2.0 * A * d1
                Ax = d1 * Zx
                Axx = d2 * Zx * Zx + d1 * Zxx
        cache.append((A, Ax, Axx, None, None))
        return A, Ax, Axx, cache

    def backward_taylor(self, params, cache, gu, gux, guxx) -> np.ndarray:
        """Gradient of ``sum(gu*u + gux*u_x + guxx*u_xx)`` w.r.t. ``params``."""
        layers = self.unpack(params)
        gZ, gZx, gZxx = gu, gux, guxx
        grads = []
        for idx in range(len(layers) - 1, -1, -1):
            W, _ = layers[idx]
            A, Ax, Axx, _, _ = cache[idx]
            dW = gZ.T @ A + gZx.T @ Ax + gZxx.T @ Axx
            grads.append((dW, gZ.sum(axis=0)))
            if idx == 0:
                break
            gA, gAx, gAxx = gZ @ W, gZx @ W, gZxx @ W
            # undo tanh: A = t(Z), Ax = t' Zx, Axx = t'' Zx^2 + t' Zxx
            _, _, _, Zx, Zxx = cache[idx - 1]
            d1 = 1.0 - A * A
            d2 = -2.0 * A * d1
            d3 = -2.0 * d1 * d1 + 4.0 * A * A * d1
            gZxx = gAxx * d1
            gZx = gAx * d1 + 2.0 * gAxx * d2 * Zx
            gZ = gA * d1 + gAx * d2 * Zx + gAxx * (d3 * Zx * Zx + d2 * Zxx)
        return _flatten(reversed(grads))


def _flatten(grads) -> np.ndarray:
    flat = []
    for dW, db in grads:
        flat.append(dW.reshape(-1))
        flat.append(db)
    return np.concatenate(flat)


def init_glorot(sizes: Sequence[int], seed: int) -> np.ndarray:
    """Glorot-uniform weights from SplitMix64(seed), zero biases.

    Draws happen in parameter-layout order, so the result is reproducible
    across platforms.
    """
    net = MLP(sizes)
    rng = SplitMix64(seed)
    out = []
    for o, i in net.shapes:
        bound = math.sqrt(6.0 / (i + o))
        out.extend(rng.uniform(-bound, bound) for _ in range(o * i))
        out.extend(0.0 for _ in range(o))
    return np.array(out, dtype=np.float64)


def _check_finite(term: str, value: float) -> None:
    if not math.isfinite(value):
        raise NonFiniteLoss(term, value)


class NeuralProblem(ObjectiveProblem):
    """Common plumbing: ``loss_grad`` does the work, counters wrap it."""

    def __init__(self, arch: Sequence[int], seed: int):
        self.net = MLP(arch)
        self.arch = list(arch)
        self.seed = seed
        super().__init__(self.net.n_params)
        self.x0 = init_glorot(arch, seed)

    def loss_grad(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def loss(self, params: np.ndarray) -> float:
        return self.loss_grad(params)[0]

    def _f(self, x):
        return self.loss(x)

    def _grad(self, x):
        return self.loss_grad(x)[1]

    def _fg(self, x):
        return self.loss_grad(x)

    def predict(self, params: np.ndarray, x: np.ndarray) -> np.ndarray:
        u, _ = self.net.forward(params, np.asarray(x, dtype=np.float64).reshape(-1, 1))
        return u[:, 0]


def mlp_loss_grad(params: np.ndarray, problem: NeuralProblem) -> tuple[float, np.ndarray]:
    """Loss and backprop gradient without touching the evaluation counters."""
    return problem.loss_grad(np.asarray(params, dtype=np.float64))


class RegressionProblem(NeuralProblem):
    """Mean squared error against ``target`` on equispaced points of [0, 1]."""

    name = "regression"

    def __init__(
        self,
        arch: Sequence[int] = (1, 16, 1),
        n_points: int = 32,
        target: Callable[[np.ndarray], np.ndarray] = lambda x: np.sin(2 * np.pi * x),
        seed: int = 0,
    ):
        super().__init__(arch, seed)
        self.xs = np.linspace(0.0, 1.0, n_points)
        self.ys = np.asarray(target(self.xs), dtype=np.float64) * np.ones(n_points)

    def loss(self, params):
        u, _ = self.net.forward(params, self.xs.reshape(-1, 1))
        r = u[:, 0] - self.ys
        val = float(np.mean(r * r))
        _check_finite("data", val)
        return val

    def loss_grad(self, params):
        u, acts = self.net.forward(params, self.xs.reshape(-1, 1))
        r = u[:, 0] - self.ys
        val = float(np.mean(r * r))
        _check_finite("data", val)
        dout = (2.0 / r.shape[0]) * r
        return val, self.net.backward(params, acts, dout.reshape(-1, 1))


def regression_problem(arch=(1, 16, 1), n_points=32, target=None, seed=0) -> RegressionProblem:
    if target is None:
        return RegressionProblem(arch, n_points, seed=seed)
    return RegressionProblem(arch, n_points, target, seed)


class PoissonPinnLite(NeuralProblem):
    """Collocation loss for ``u'' = -pi^2 sin(pi x)`` on [0, 1], ``u(0) = u(1) = 0``.

    Loss is ``lam_pde * mean(r_i^2) + lam_bc * (u(0)^2 + u(1)^2)`` with
    ``r_i = u''(x_i) + pi^2 sin(pi x_i)`` on the interior grid
    ``x_i = i / (n_colloc + 1)``. The exact solution is ``sin(pi x)``.

    ``second_derivative`` picks how ``u''`` is obtained:

    ``"exact"`` (default)
        Forward propagation of ``(u, u', u'')`` through the layers, and
        backprop through that.
    ``"fd"``
        Central second difference with spacing ``fd_h``: three plain forward
        passes per point. The ``1/fd_h**2`` factor amplifies float64
        rounding in the loss to around ``1e-8`` relative, which is harmless
        for training but too noisy for a ``1e-6`` finite-difference gradient
        check, hence not the default.
    """

    name = "poisson-pinnlite"

    def __init__(
        self,
        arch: Sequence[int] = (1, 16, 16, 1),
        n_colloc: int = 64,
        fd_h: float = 1e-4,
        lam_pde: float = 1.0,
        lam_bc: float = 100.0,
        seed: int = 7,
        second_derivative: str = "exact",
    ):
        if n_colloc < 8:
            raise ValueError("need at least 8 collocation points")
        spacing = 1.0 / (n_colloc + 1)
        if not 0.0 < fd_h < 0.1 * spacing:
            raise ValueError(f"fd_h={fd_h} must be well below the grid spacing {spacing:.3g}")
        if second_derivative not in ("exact", "fd"):
            raise ValueError(f"unknown second_derivative mode {second_derivative!r}")
        super().__init__(arch, seed)
        self.n_colloc = n_colloc
        self.fd_h = fd_h
        self.lam_pde = lam_pde
        self.lam_bc = lam_bc
        self.second_derivative = second_derivative
        self.xc = np.arange(1, n_colloc + 1) / (n_colloc + 1)
        self.forcing = np.pi**2 * np.sin(np.pi * self.xc)
        if second_derivative == "fd":
            # one batch: [x - h | x | x + h | 0, 1]
            pts = [self.xc - fd_h, self.xc, self.xc + fd_h, [0.0, 1.0]]
        else:
            pts = [self.xc, [0.0, 1.0]]
        self.batch = np.concatenate(pts).reshape(-1, 1)

    def residuals_of(self, u: Callable[[np.ndarray], np.ndarray], u_xx=None) -> np.ndarray:
        """Collocation residuals for an arbitrary callable ``u``.

        With ``u_xx`` given, it is used directly; otherwise the ``fd_h``
        stencil is applied to ``u``.
        """
        x = self.xc
        if u_xx is not None:
            return u_xx(x) + self.forcing
        h = self.fd_h
        return (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h) + self.forcing

    def _combine(self, uxx, ub):
        r = uxx + self.forcing
        pde = float(np.mean(r * r))
        bc = float(ub[0] * ub[0] + ub[1] * ub[1])
        _check_finite("pde", pde)
        _check_finite("bc", bc)
        return r, pde, bc

    def _fd_parts(self, out):
        n = self.n_colloc
        um, u0, up, ub = out[:n], out[n:2 * n], out[2 * n:3 * n], out[3 * n:]
        return (up - 2.0 * u0 + um) / (self.fd_h * self.fd_h), ub

    def loss(self, params):
        if self.second_derivative == "fd":
            out, _ = self.net.forward(params, self.batch)
            uxx, ub = self._fd_parts(out[:, 0])
        else:
            u, _, u2, _ = self.net.forward_taylor(params, self.batch[:, 0])
            n = self.n_colloc
            uxx, ub = u2[:n, 0], u[n:, 0]
        _, pde, bc = self._combine(uxx, ub)
        return self.lam_pde * pde + self.lam_bc * bc

    def loss_grad(self, params):
        n = self.n_colloc
        if self.second_derivative == "fd":
            out, acts = self.net.forward(params, self.batch)
            uxx, ub = self._fd_parts(out[:, 0])
            r, pde, bc = self._combine(uxx, ub)
            dr = (2.0 * self.lam_pde / n) * r / (self.fd_h * self.fd_h)
            dout = np.concatenate([dr, -2.0 * dr, dr, 2.0 * self.lam_bc * ub])
            grad = self.net.backward(params, acts, dout.reshape(-1, 1))
        else:
            u, _, u2, cache = self.net.forward_taylor(params, self.batch[:, 0])
            uxx, ub = u2[:n, 0], u[n:, 0]
            r, pde, bc = self._combine(uxx, ub)
            gu = np.zeros_like(u)
            gu[n:, 0] = 2.0 * self.lam_bc * ub
            guxx = np.zeros_like(u)
            guxx[:n, 0] = (2.0 * self.lam_pde / n) * r
            grad = self.net.backward_taylor(params, cache, gu, np.zeros_like(u), guxx)
        return self.lam_pde * pde + self.lam_bc * bc, grad

    def relative_l2_error(self, params: np.ndarray, n_eval: int = 201) -> float:
        x = np.linspace(0.0, 1.0, n_eval)
        exact = np.sin(np.pi * x)
        diff = self.predict(params, x) - exact
        return float(np.linalg.norm(diff) / np.linalg.norm(exact))


def poisson_pinnlite(arch=(1, 16, 16, 1), n_colloc=64, fd_h=1e-4, lam_pde=1.0, lam_bc=100.0,
                     seed=7, second_derivative="exact") -> PoissonPinnLite:
    return PoissonPinnLite(arch, n_colloc, fd_h, lam_pde, lam_bc, seed, second_derivative)

"""Broyden-family updates of the Hessian approximation, with self-scaling.

Notation: ``s = x_{k+1} - x_k``, ``y = g_{k+1} - g_k``, ``B`` approximates
the Hessian and ``H = B^{-1}`` its inverse. The family is parametrized on
the direct side by ``theta`` (0 is BFGS, 1 is DFP); on the inverse side the
matching coefficient is ``phi = (1 - theta) / (1 + (h b - 1) theta)``, so
BFGS is ``phi = 1`` and DFP is ``phi = 0``. Self-scaling multiplies ``B`` by
``tau`` (``H`` by ``1/tau``) before the rank-two correction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..linalg import mirror_lower

CURVATURE_EPS = 1e-14
DEGENERATE_A = 1e-12


def has_curvature(s: np.ndarray, y: np.ndarray, eps: float = CURVATURE_EPS) -> bool:
    """True when ``y^T s`` is safely positive, i.e. an update may be applied."""
    return float(np.dot(y, s)) > eps * float(np.linalg.norm(y)) * float(np.linalg.norm(s))


def bfgs_inverse_update(H: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Plain BFGS update of the inverse approximation.

    Written in the product-expanded form
    ``H + (s^T y + y^T H y) s s^T / (s^T y)^2 - (H y s^T + s y^T H) / s^T y``,
    independent of the family code below. Returns ``H`` unchanged when the
    curvature test fails.
    """
    if not has_curvature(s, y):
        return H
    ys = float(np.dot(y, s))
    Hy = H @ y
    yHy = float(np.dot(y, Hy))
    out = H + ((ys + yHy) / (ys * ys)) * np.outer(s, s) - (np.outer(Hy, s) + np.outer(s, Hy)) / ys
    return mirror_lower(out)


def dfp_inverse_update(H: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """DFP update of the inverse approximation: ``H - Hy y^T H / y^T H y + s s^T / y^T s``."""
    if not has_curvature(s, y):
        return H
    ys = float(np.dot(y, s))
    Hy = H @ y
    yHy = float(np.dot(y, Hy))
    out = H - np.outer(Hy, Hy) / yHy + np.outer(s, s) / ys
    return mirror_lower(out)


@dataclass
class ScalingQuantities:
    """Per-iteration scalars of the self-scaled Broyden update.

    ``b = s^T B s / y^T s`` and ``h = y^T H y / y^T s``; the rest follow the
    selection chain in :func:`scaling_chain`. When ``degenerate`` is set
    (``a = b h - 1`` numerically zero) the chain was skipped and the values
    describe an unscaled BFGS step.
    """

    ys: float
    sBs: float
    yHy: float
    b: float
    h: float
    a: float
    c: float = math.nan
    rho_minus: float = math.nan
    theta_minus: float = math.nan
    theta_plus: float = math.nan
    theta: float = 0.0
    rho_plus: float = 1.0
    sigma: float = 1.0
    sigma_pow: float = 1.0
    tau: float = 1.0
    phi: float = 1.0
    degenerate: bool = False


def phi_from_theta(theta: float, b: float, h: float) -> float:
    return (1.0 - theta) / (1.0 + (h * b - 1.0) * theta)


def _sigma_pow(sigma: float, n: int) -> float:
    # |sigma|^(1/(1-n)); the exponent is undefined for n = 1, use 1 there
    if n <= 1:
        return 1.0
    return abs(sigma) ** (1.0 / (1.0 - n))


def scaling_chain(
    ys: float,
    sBs: float,
    yHy: float,
    n: int,
    theta: float | None = None,
    tau: float | None = None,
) -> ScalingQuantities:
    """Compute ``theta``, ``tau`` and ``phi`` for the self-scaled Broyden update.

    ``n`` is the number of optimization variables. ``theta``/``tau`` force
    those values instead of the automatic selection (``phi`` always follows
    from ``theta``).

    Chain, with ``a = b h - 1``::

        c      = sqrt(a / (1 + a))
        rho-   = min(1, h (1 - c))
        theta- = (rho- - 1) / a
        theta+ = 1 / rho-
        theta  = max(theta-, min(theta+, (1 - b) / b))
        rho+   = min(1, 1 / b)
        sigma  = 1 + theta a
        sigma~ = |sigma|^(1 / (1 - n))
        tau    = min(rho+ sigma~, sigma)       if theta <= 0
                 rho+ min(sigma~, 1 / theta)   otherwise
        phi    = (1 - theta) / (1 + (h b - 1) theta)
    """
    b = sBs / ys
    h = yHy / ys
    a = b * h - 1.0
    q = ScalingQuantities(ys=ys, sBs=sBs, yHy=yHy, b=b, h=h, a=a)
    q.rho_plus = min(1.0, 1.0 / b)

    if theta is None and a <= DEGENERATE_A:
        # the chain divides by a; fall back to unscaled BFGS
        q.degenerate = True
        q.tau = 1.0 if tau is None else tau
        return q

    if theta is None:
        q.c = math.sqrt(a / (1.0 + a))
        q.rho_minus = min(1.0, h * (1.0 - q.c))
        q.theta_minus = (q.rho_minus - 1.0) / a
        q.theta_plus = 1.0 / q.rho_minus
        q.theta = max(q.theta_minus, min(q.theta_plus, (1.0 - b) / b))
    else:
        q.theta = theta

    q.sigma = 1.0 + q.theta * a
    q.sigma_pow = _sigma_pow(q.sigma, n)
    if tau is not None:
        q.tau = tau
    elif q.theta <= 0.0:
        q.tau = min(q.rho_plus * q.sigma_pow, q.sigma)
    else:
        q.tau = q.rho_plus * min(q.sigma_pow, 1.0 / q.theta)
    q.phi = phi_from_theta(q.theta, b, h)
    return q


def broyden_scaling_chain(s, y, B, H, n: int, sBs: float | None = None, **overrides) -> ScalingQuantities:
    """:func:`scaling_chain` from vectors and matrices.

    Pass ``B=None`` with ``sBs`` when only the product ``B s`` is known
    (line-search mode, where ``B s = -alpha g``).
    """
    ys = float(np.dot(y, s))
    if sBs is None:
        sBs = float(np.dot(s, B @ s))
    yHy = float(np.dot(y, H @ y))
    return scaling_chain(ys, sBs, yHy, n, **overrides)


def ssbfgs_quantities(ys: float, sBs: float, yHy: float, n: int) -> ScalingQuantities:
    """BFGS (``theta = 0``) with the scaling ``tau = min(1, 1/b)``."""
    b = sBs / ys
    return scaling_chain(ys, sBs, yHy, n, theta=0.0, tau=min(1.0, 1.0 / b))


def ssbroyden_inverse_update(H: np.ndarray, s: np.ndarray, y: np.ndarray, q: ScalingQuantities) -> np.ndarray:
    """``H+ = (1/tau)[H - Hy y^T H / y^T H y + phi (y^T H y) v v^T] + s s^T / y^T s``.

    ``v = s / y^T s - H y / y^T H y``. Since ``v^T y = 0`` the bracket
    annihilates ``y`` and the secant condition ``H+ y = s`` holds for any
    ``tau > 0`` and ``phi``.
    """
    if not has_curvature(s, y):
        return H
    ys = float(np.dot(y, s))
    Hy = H @ y
    yHy = float(np.dot(y, Hy))
    v = s / ys - Hy / yHy
    inner = H - np.outer(Hy, Hy) / yHy
    if q.phi != 0.0:
        inner = inner + (q.phi * yHy) * np.outer(v, v)
    out = inner / q.tau + np.outer(s, s) / ys
    return mirror_lower(out)


def ssbroyden_direct_update(B: np.ndarray, s: np.ndarray, y: np.ndarray, q: ScalingQuantities) -> np.ndarray:
    """``B+ = tau [B - Bs s^T B / s^T B s + theta (s^T B s) w w^T] + y y^T / y^T s``.

    ``w = y / y^T s - B s / s^T B s``. Inverse of :func:`ssbroyden_inverse_update`
    for the same quantities.
    """
    if not has_curvature(s, y):
        return B
    ys = float(np.dot(y, s))
    Bs = B @ s
    sBs = float(np.dot(s, Bs))
    w = y / ys - Bs / sBs
    inner = B - np.outer(Bs, Bs) / sBs
    if q.theta != 0.0:
        inner = inner + (q.theta * sBs) * np.outer(w, w)
    out = q.tau * inner + np.outer(y, y) / ys
    return mirror_lower(out)


def ssbfgs_update(H: np.ndarray, s: np.ndarray, y: np.ndarray, sBs: float | None = None, B=None) -> np.ndarray:
    """Self-scaled BFGS on the inverse side, ``tau = min(1, 1/b)``.

    ``s^T B s`` comes from ``sBs`` if given, else from ``B``, else from
    ``H`` by solving (only sensible for tests and small problems).
    """
    if not has_curvature(s, y):
        return H
    if sBs is None:
        sBs = float(np.dot(s, B @ s)) if B is not None else float(np.dot(s, np.linalg.solve(H, s)))
    ys = float(np.dot(y, s))
    yHy = float(np.dot(y, H @ y))
    q = ssbfgs_quantities(ys, sBs, yHy, s.shape[0])
    return ssbroyden_inverse_update(H, s, y, q)

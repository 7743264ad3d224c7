"""Limited-memory BFGS direction via the two-loop recursion."""
from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np


class LBFGSHistory:
    """Ring buffer of the most recent ``(s, y, 1 / y^T s)`` triples."""

    def __init__(self, memory: int):
        if memory < 1:
            raise ValueError("memory must be >= 1")
        self.memory = memory
        self.pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=memory)

    def push(self, s: np.ndarray, y: np.ndarray) -> None:
        ys = float(np.dot(y, s))
        if not ys > 0.0:
            raise ValueError("L-BFGS pairs need y^T s > 0")
        self.pairs.append((s.copy(), y.copy(), 1.0 / ys))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def lbfgs_direction(
    history: Iterable[tuple[np.ndarray, np.ndarray, float]],
    g: np.ndarray,
    scaling: str = "gamma",
) -> np.ndarray:
    """Return ``-H_k g`` without forming ``H_k``.

    ``history`` is ordered oldest first. ``scaling="gamma"`` starts the
    recursion from ``(s^T y / y^T y) I`` using the newest pair;
    ``scaling="identity"`` starts from ``I``, which with unbounded memory
    reproduces dense BFGS started at ``H_0 = I``.
    """
    pairs = list(history)
    if not pairs:
        return -g.copy()
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q = q - a * y
    if scaling == "gamma":
        s, y, _ = pairs[-1]
        q = q * (float(np.dot(s, y)) / float(np.dot(y, y)))
    elif scaling != "identity":
        raise ValueError(f"unknown scaling {scaling!r}")
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q = q + (a - b) * s
    return -q

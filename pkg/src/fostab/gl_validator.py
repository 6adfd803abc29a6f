"""Grünwald-Letnikov simulation as an empirical stability check.

Each component obeys ``D^{alpha_i} x_i = sum_j a_ij x_j + b_i``.  The
explicit scheme uses the full history (no short-memory truncation) and is
applied to the deviation ``y = x - x0`` so that the initial value enters as
in the Caputo derivative (a constant state has zero derivative):

    y_i(t_k) = h^{alpha_i} (A x(t_{k-1}) + b)_i - sum_{j=1..k} w_j^{(alpha_i)} y_i(t_{k-j})

For orders above one the initial velocity is taken as zero.

Decay of fractional systems is algebraic rather than exponential, so the
classification is deliberately loose and may answer ``INCONCLUSIVE``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

OVERFLOW = 1e150


class Empirical(enum.Enum):
    DECAYING = "Decaying"
    GROWING = "Growing"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


def gl_weights(alpha: float, K: int) -> np.ndarray:
    """``w_0 = 1``, ``w_j = (1 - (alpha + 1)/j) w_{j-1}`` for ``j = 1..K``."""
    if not 0 < alpha < 2:
        raise ValueError(f"order {alpha} outside (0, 2)")
    if K < 1:
        raise ValueError("need at least one step")
    j = np.arange(1, K + 1)
    w = np.empty(K + 1)
    w[0] = 1.0
    w[1:] = np.cumprod(1.0 - (alpha + 1.0) / j)
    return w


@dataclass(frozen=True)
class Trajectory:
    h: float
    x: np.ndarray  # (steps + 1, n)
    x0: np.ndarray
    escaped: bool = False

    @property
    def t(self) -> np.ndarray:
        return self.h * np.arange(len(self.x))

    def csv(self) -> str:
        n = self.x.shape[1]
        lines = ["t," + ",".join(f"x{i + 1}" for i in range(n))]
        for t, row in zip(self.t, self.x):
            lines.append(",".join(format(v, ".17g") for v in (t, *row)))
        return "\n".join(lines) + "\n"


def equilibrium(A, forcing=None) -> np.ndarray:
    """Rest point ``-A^{-1} b`` (zero without forcing)."""
    A = np.asarray(A, dtype=float)
    if forcing is None or not np.any(forcing):
        return np.zeros(len(A))
    return -np.linalg.solve(A, np.asarray(forcing, dtype=float))


def simulate(A, orders: Sequence[float], x0=None, h: float = 1e-3, horizon: float = 50.0,
             forcing=None) -> Trajectory:
    """Explicit GL trajectory with full memory.

    ``x0`` defaults to all ones; stability of the linear system does not
    depend on it.  Integration stops early, with ``escaped=True``, once the
    state exceeds :data:`OVERFLOW`.
    """
    A = np.asarray(A, dtype=float)
    n = len(A)
    orders = np.asarray([float(o) for o in orders])
    if h <= 0 or horizon <= 0:
        raise ValueError("step and horizon must be positive")
    if len(orders) != n:
        raise ValueError("one order per state")
    K = int(round(horizon / h))
    W = np.stack([gl_weights(a, K) for a in orders])  # (n, K+1)
    hp = h ** orders
    b = np.zeros(n) if forcing is None else np.asarray(forcing, dtype=float)
    x0 = np.ones(n) if x0 is None else np.asarray(x0, dtype=float)
    Y = np.empty((K + 1, n))  # deviation from x0
    Y[0] = 0.0
    for k in range(1, K + 1):
        memory = np.einsum("ij,ji->i", W[:, 1:k + 1], Y[k - 1::-1])
        Y[k] = hp * (A @ (Y[k - 1] + x0) + b) - memory
        if not np.all(np.abs(Y[k]) < OVERFLOW):
            return Trajectory(h, Y[:k] + x0, x0, escaped=True)
    return Trajectory(h, Y + x0, x0)


def empirical_verdict(traj: Trajectory, eq=None) -> Empirical:
    """Compare the largest deviation from ``eq`` in the first and last quarters."""
    if traj.escaped:
        return Empirical.GROWING
    if len(traj.x) < 1000:
        raise ValueError("classification needs at least 1000 steps")
    eq = np.zeros(traj.x.shape[1]) if eq is None else np.asarray(eq, dtype=float)
    dev = np.max(np.abs(traj.x - eq), axis=1)
    q = len(dev) // 4
    first, last = dev[:q].max(), dev[-q:].max()
    if last < 0.1 * first:
        return Empirical.DECAYING
    if last > 10 * first:
        return Empirical.GROWING
    return Empirical.INCONCLUSIVE

"""Distributed averaging of switching frequencies.

Each node integrates ``df_i/dt = sum_j W_ij (f_j - f_i)`` with explicit Euler.
For symmetric ``W`` the sum of frequencies is invariant, so the population
converges to the mean of its initial frequencies.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import as_vector, check_positive
from .errors import ConfigError, EmptyPopulationError, ShapeError, StabilityError


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric, zero-diagonal coupling weights.

    ``entries is None`` denotes the uniform all-to-all graph with edge weight
    ``w``; it is applied in O(n) without materialising the n x n matrix.
    """

    n: int
    w: float
    entries: np.ndarray = None

    @classmethod
    def from_array(cls, W):
        W = np.array(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ShapeError(f"weight matrix must be square, got shape {W.shape}")
        if not np.array_equal(W, W.T):
            raise ConfigError("weight matrix must be symmetric")
        if np.any(np.diag(W) != 0):
            raise ConfigError("weight matrix must have a zero diagonal")
        if np.any(W < 0):
            raise ConfigError("weights must be non-negative")
        off = W[~np.eye(len(W), dtype=bool)]
        w = float(off.max()) if off.size else 0.0
        return cls(n=len(W), w=w, entries=W)

    @property
    def uniform(self):
        return self.entries is None

    def toarray(self):
        if self.uniform:
            return self.w * (np.ones((self.n, self.n)) - np.eye(self.n))
        return self.entries.copy()

    def spectral_radius(self):
        """Largest eigenvalue of the graph Laplacian."""
        if self.uniform:
            return self.w * self.n if self.n > 1 else 0.0
        L = np.diag(self.entries.sum(axis=1)) - self.entries
        return float(np.linalg.eigvalsh(L)[-1])

    def disagreement(self, f):
        """``sum_j W_ij (f_j - f_i)`` for every node."""
        if self.uniform:
            return self.w * (f.sum() - self.n * f)
        return self.entries @ f - self.entries.sum(axis=1) * f


def build_weight_matrix(n, w):
    """All-to-all weights: ``w`` off the diagonal, zero on it."""
    if n < 1:
        raise EmptyPopulationError(f"population must have at least one node, got n={n}")
    return WeightMatrix(n=int(n), w=check_positive("w", w, allow_zero=True))


def stability_bound(n, w):
    """Largest stable Euler step ``2 / (w n)`` for the all-to-all graph."""
    if n < 1:
        raise EmptyPopulationError(f"population must have at least one node, got n={n}")
    if n == 1 or w == 0:
        return math.inf
    return 2.0 / (w * n)


def _max_step(W):
    rho = W.spectral_radius()
    return math.inf if rho == 0 else 2.0 / rho


def consensus_step(f, W, h):
    """One simultaneous (Jacobi) Euler update of every frequency."""
    f = as_vector(f, "f")
    if len(f) != W.n:
        raise ShapeError(f"frequency vector has {len(f)} entries, weights cover {W.n}")
    check_positive("h", h)
    h_max = _max_step(W)
    if not h < h_max:
        raise StabilityError(
            f"consensus step h={h} violates the Euler stability bound h < {h_max:.6g} s")
    return f + h * W.disagreement(f)


@dataclass(frozen=True)
class ConsensusRun:
    trajectory: np.ndarray  # (samples, n)
    steps: np.ndarray  # step index of each retained sample
    converged: bool
    n_steps: int
    max_deviation: float
    target: float


def run_consensus(f0, W, h, tol=1e-6, max_steps=100_000, stride=1):
    """Iterate until every frequency is within ``tol`` of ``mean(f0)``.

    Non-convergence is reported through ``converged=False``, not raised.
    """
    f = as_vector(f0, "f0").copy()
    if np.any(f <= 0):
        raise ConfigError("frequencies must be strictly positive")
    target = f.mean()
    traj, steps = [f.copy()], [0]
    dev = np.abs(f - target).max()
    k = 0
    while dev > tol and k < max_steps:
        f = consensus_step(f, W, h)
        k += 1
        dev = np.abs(f - target).max()
        if k % stride == 0:
            traj.append(f.copy())
            steps.append(k)
    if steps[-1] != k:
        traj.append(f.copy())
        steps.append(k)
    return ConsensusRun(np.array(traj), np.array(steps), bool(dev <= tol), k,
                        float(dev), float(target))

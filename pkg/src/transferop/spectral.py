"""Stationary vector of a stochastic matrix by power iteration."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .operator import StochasticMatrix

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class StationaryResult:
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool
    unique: bool
    method: str = "power_iteration"

    def to_json(self):
        return {"residual": self.residual, "iterations": self.iterations, "method": self.method,
                "flags": {"converged": self.converged, "unique": self.unique}}

    def save(self, csv_path, json_path=None):
        K = self.vector.shape[0]
        centers = (np.arange(K) + 0.5) / K
        rows = np.column_stack([centers, self.vector, self.vector * K])
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("center,mass,density\n")
            np.savetxt(fh, rows, fmt="%.17g", delimiter=",")
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def closed_classes(P):
    """Number of closed communicating classes of the chain with matrix ``P``.

    The eigenvalue-1 left eigenvector is unique exactly when this is 1.
    """
    A = csr_matrix(np.asarray(P) > 0)
    n, labels = connected_components(A, directed=True, connection="strong")
    leaves = np.ones(n, bool)
    src, dst = A.nonzero()
    leaves[labels[src][labels[src] != labels[dst]]] = False
    return int(leaves.sum())


def leading_left_eigenvector(P: StochasticMatrix, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> StationaryResult:
    """Power iteration on ``v -> v P`` from the uniform vector.

    Stops once the L1 change between iterates drops below ``tol``.  If that
    never happens (periodic chains, for example) the last iterate is
    returned with ``converged=False``.  ``unique`` is False when the chain
    has more than one closed class, in which case the result depends on
    the start vector.
    """
    M = P.entries if isinstance(P, StochasticMatrix) else np.asarray(P, dtype=np.float64)
    K = M.shape[0]
    v = np.full(K, 1.0 / K)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        w = v @ M
        w /= w.sum()
        change = np.abs(w - v).sum()
        v = w
        if change < tol:
            converged = True
            break
    residual = float(np.abs(v @ M - v).sum())
    return StationaryResult(v, residual, it, converged, closed_classes(M) == 1)


@dataclass(frozen=True, eq=False)
class CellDensity:
    """Piecewise-constant density with value ``values[i]`` on cell ``B_i``."""

    values: np.ndarray

    @property
    def K(self):
        return self.values.shape[0]

    def integral(self):
        return float(self.values.sum() / self.K)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.minimum(np.floor(x * self.K).astype(np.int64), self.K - 1)
        out = self.values[idx]
        return float(out) if out.ndim == 0 else out


def stationary_to_density(v, K=None) -> CellDensity:
    """Cell masses to density values ``v_i * K``."""
    v = np.asarray(v, dtype=np.float64)
    if K is not None and v.shape[0] != K:
        raise ValueError(f"vector length {v.shape[0]} != K={K}")
    return CellDensity(v * v.shape[0])

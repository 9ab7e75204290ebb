"""Histogram density estimation on the unit interval and unit square.

Bins are the uniform partition ``B_i = [(i-1)/K, i/K)`` with the last bin
closed so that ``x = 1`` is representable.  Bin indices exposed through
:func:`bin_index` are 1-based; arrays are indexed from 0 as usual.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, check_unit_interval


def _bins0(x, K):
    # 0-based bin of each point; doubling K splits every bin exactly in two
    # because scaling by a power of two commutes with rounding
    idx = np.floor(x * K).astype(np.int64)
    return np.minimum(idx, K - 1)


def bin_index(x, K: int):
    """1-based bin index of ``x`` in the uniform K-bin partition of [0, 1]."""
    if K < 1:
        raise ValueError("K must be at least 1")
    arr = check_unit_interval(x)
    out = _bins0(arr, K) + 1
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class HistDensity:
    """Fitted histogram: occupancy ``counts`` of shape ``(K,)`` or ``(K, K)``."""

    K: int
    dim: int
    counts: np.ndarray
    N: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (self.K,) * self.dim:
            raise ValueError(f"counts shape {counts.shape} does not match K={self.K}, dim={self.dim}")
        if int(counts.sum()) != self.N:
            raise ValueError("counts must sum to N")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def bin_volume(self):
        return (1.0 / self.K) ** self.dim

    @property
    def densities(self):
        """Density value on every bin, same shape as ``counts``."""
        return self.counts * (self.K ** self.dim / self.N)

    @property
    def centers(self):
        return (np.arange(self.K) + 0.5) / self.K

    def __call__(self, x):
        return hist_eval(self, x)

    def to_json(self):
        return {"dim": self.dim, "K": self.K, "N": self.N, "counts": self.counts.tolist()}

    def save(self, json_path, csv_path=None):
        Path(json_path).write_text(json.dumps(self.to_json()) + "\n")
        if csv_path is not None:
            c = self.centers
            with open(csv_path, "w", newline="\n") as fh:
                if self.dim == 1:
                    fh.write("center,density\n")
                    np.savetxt(fh, np.column_stack([c, self.densities]), fmt="%.17g", delimiter=",")
                else:
                    fh.write("center_x,center_y,density\n")
                    cx, cy = np.meshgrid(c, c, indexing="ij")
                    rows = np.column_stack([cx.ravel(), cy.ravel(), self.densities.ravel()])
                    np.savetxt(fh, rows, fmt="%.17g", delimiter=",")

    @classmethod
    def load(cls, json_path):
        d = json.loads(Path(json_path).read_text())
        return cls(d["K"], d["dim"], np.asarray(d["counts"]), d["N"])


def hist_fit(samples, K: int, dim: int = 1) -> HistDensity:
    """Count samples per bin.  2-D samples are ``(N, 2)`` rows ``(x, x')``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    pts = np.asarray(samples, dtype=np.float64)
    if dim == 2:
        pts = pts.reshape(-1, 2)
    else:
        pts = pts.ravel()
    if pts.shape[0] < 1:
        raise ValueError("need at least one sample")
    bad = ~((pts >= 0.0) & (pts <= 1.0))
    if bad.any():
        rows = np.flatnonzero(bad if dim == 1 else bad.any(axis=1))
        raise DomainError(f"samples outside the unit domain at index {rows[:10].tolist()}", rows.tolist())
    n = pts.shape[0]
    if dim == 1:
        counts = np.bincount(_bins0(pts, K), minlength=K)
    else:
        flat = _bins0(pts[:, 0], K) * K + _bins0(pts[:, 1], K)
        counts = np.bincount(flat, minlength=K * K).reshape(K, K)
    return HistDensity(K, dim, counts, n)


def hist_eval(h: HistDensity, x):
    """Histogram density ``K**dim * count(bin(x)) / N`` at point(s) ``x``."""
    arr = check_unit_interval(x)
    if h.dim == 1:
        out = h.counts[_bins0(arr, h.K)] * (h.K / h.N)
        return float(out) if out.ndim == 0 else out
    if arr.shape[-1] != 2:
        raise ValueError("2-D histogram points must have shape (2,) or (M, 2)")
    out = h.counts[_bins0(arr[..., 0], h.K), _bins0(arr[..., 1], h.K)] * (h.K ** 2 / h.N)
    return float(out) if out.ndim == 0 else out


def hist_bias_bound(K, C1):
    """Bias bound ``C1 / K`` for a density with ``|p'| <= C1``."""
    if C1 < 0:
        raise ValueError("C1 must be non-negative")
    return C1 / K


def hist_mse_upper_bound(K, N, C1, p_hat):
    """``C1^2/K^2 + p*K/N + p^2/N``: squared bias bound plus variance."""
    K = np.asarray(K, dtype=np.float64)
    out = C1 ** 2 / K ** 2 + p_hat * K / N + p_hat ** 2 / N
    return float(out) if out.ndim == 0 else out


def hist_optimal_K(N, C1, p_tilde):
    """Return ``(K_formula, K_argmin)``.

    ``K_formula`` rounds the closed form ``(N C1^2 / p)^(1/3)``.
    ``K_argmin`` is the integer minimiser of :func:`hist_mse_upper_bound`;
    the bound is convex in K, so the minimiser is one of the integers
    neighbouring its stationary point ``(2 N C1^2 / p)^(1/3)``.
    """
    if p_tilde <= 0:
        raise ValueError("p_tilde must be positive")
    k_formula = max(1, round((N * C1 ** 2 / p_tilde) ** (1.0 / 3.0)))
    k_star = (2.0 * N * C1 ** 2 / p_tilde) ** (1.0 / 3.0)
    candidates = {max(1, math.floor(k_star)), max(1, math.ceil(k_star))}
    k_argmin = min(sorted(candidates), key=lambda k: hist_mse_upper_bound(k, N, C1, p_tilde))
    return k_formula, k_argmin

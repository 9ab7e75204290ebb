"""Finite-rank estimates of the transfer operator on a uniform K-cell grid.

Entry ``(i, j)`` of every matrix estimates ``P(x' in B_j | x in B_i)``.
Four constructions are provided:

=====================  =====================================================
``ulam_counts``        transition fractions counted from sample pairs
``ulam_exact``         Lebesgue measure of ``B_i ∩ f^-1(B_j)`` by quadrature
``kde_conditional``    ratio of a 2-D joint KDE and a 1-D marginal KDE
``noisy_kernel_exact`` truncated-normal transition kernel integrated over B_j
=====================  =====================================================

Rows that receive no data are replaced by the uniform distribution and
flagged, so the result is always row-stochastic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import histdens
from ._backend import kernels
from .dynamics import MapKind, MapSpec, SampleSet, truncated_normal_cdf
from .errors import DomainError, NumericalError
from .kde import as_kernel, kde_eval, kde_eval_grid, kde_fit

MARGINAL_FLOOR = 1e-12
DEFAULT_QUAD_POINTS = 1024
ROW_SUM_TOL = 1e-9


class Method(str, Enum):
    ULAM_COUNTS = "ulam_counts"
    ULAM_EXACT = "ulam_exact"
    KDE_CONDITIONAL = "kde_conditional"
    NOISY_KERNEL_EXACT = "noisy_kernel_exact"


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    entries: np.ndarray
    method: Method
    flags: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.array(self.entries, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {P.shape}")
        if not np.isfinite(P).all() or (P < 0).any():
            raise ValueError("entries must be finite and non-negative")
        dev = np.abs(P.sum(axis=1) - 1.0)
        if dev.size and dev.max() > ROW_SUM_TOL:
            raise ValueError(f"row {int(dev.argmax())} sums to {P[dev.argmax()].sum()!r}, not 1")
        flags = np.zeros(P.shape[0], bool) if self.flags is None else np.array(self.flags, bool)
        P.flags.writeable = False
        flags.flags.writeable = False
        object.__setattr__(self, "entries", P)
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "method", Method(self.method))

    @property
    def K(self):
        return self.entries.shape[0]

    @property
    def edges(self):
        return np.linspace(0.0, 1.0, self.K + 1)

    @property
    def centers(self):
        return (np.arange(self.K) + 0.5) / self.K

    def row_sums(self):
        return self.entries.sum(axis=1)

    def to_json(self):
        return {"K": self.K, "method": self.method.value,
                "flags": np.flatnonzero(self.flags).tolist(), **self.meta}

    def save(self, csv_path, json_path=None):
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(f"# K={self.K},method={self.method.value}\n")
            np.savetxt(fh, self.entries, fmt="%.17g", delimiter=",")
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, csv_path, json_path=None):
        with open(csv_path) as fh:
            header = fh.readline().lstrip("#").strip()
        info = dict(item.split("=", 1) for item in header.split(","))
        entries = np.loadtxt(csv_path, delimiter=",", comments="#", ndmin=2)
        flags = None
        meta = {}
        if json_path is not None and Path(json_path).exists():
            meta = json.loads(Path(json_path).read_text())
            flags = np.zeros(entries.shape[0], bool)
            flags[meta.pop("flags", [])] = True
            meta.pop("K", None)
            meta.pop("method", None)
        return cls(entries, info["method"], flags, meta)


def _normalise_rows(M):
    sums = M.sum(axis=1)
    empty = ~(sums > 0)
    out = np.empty_like(M, dtype=np.float64)
    out[~empty] = M[~empty] / sums[~empty, None]
    out[empty] = 1.0 / M.shape[1]
    return out, empty


def transition_counts(s: SampleSet, K: int):
    """Joint occupancy ``#{x_n in B_i, x_{n+1} in B_j}`` as a K x K integer array."""
    i = histdens._bins0(s.x, K)
    j = histdens._bins0(s.x_next, K)
    return np.bincount(i * K + j, minlength=K * K).reshape(K, K)


def ulam_matrix_from_pairs(s: SampleSet, K: int) -> StochasticMatrix:
    """Ulam transition fractions from observed ``(x_n, x_{n+1})`` pairs."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if len(s) == 0:
        raise ValueError("empty sample set")
    counts = transition_counts(s, K)
    P, empty = _normalise_rows(counts.astype(np.float64))
    return StochasticMatrix(P, Method.ULAM_COUNTS, empty,
                            {"N": len(s), "sample_mode": s.mode.value, "seed": int(s.seed)})


def ulam_matrix_exact(spec: MapSpec, K: int, quad_points_per_cell: int = DEFAULT_QUAD_POINTS) -> StochasticMatrix:
    """``m(B_i ∩ f^-1(B_j)) / m(B_i)`` by composite midpoint quadrature.

    Each row is the fraction of ``quad_points_per_cell`` midpoints of
    ``B_i`` whose image lands in ``B_j``; every row sums to exactly 1.
    """
    if spec.noise is not None:
        raise ValueError("ulam_matrix_exact needs a noiseless map")
    M = int(quad_points_per_cell)
    if K < 1 or M < 1:
        raise ValueError("K and quad_points_per_cell must be positive")
    sub = (np.arange(M) + 0.5) / M
    x = (np.arange(K)[:, None] + sub[None, :]) / K
    y = spec.deterministic(x)
    bad = ~((y >= 0.0) & (y <= 1.0))
    if bad.any():
        raise DomainError("map image left [0, 1] during quadrature", np.flatnonzero(bad).tolist())
    j = histdens._bins0(y, K)
    rows = np.repeat(np.arange(K), M)
    counts = np.bincount(rows * K + j.ravel(), minlength=K * K).reshape(K, K)
    return StochasticMatrix(counts / M, Method.ULAM_EXACT, None,
                            {"quad_points_per_cell": M, "map": spec.name.value, "params": list(spec.params)})


def kde_transfer_matrix(s: SampleSet, K: int, delta_marginal, delta_joint, kernel="gaussian",
                        rule="cell_mass", boundary="clamp") -> StochasticMatrix:
    """KDE estimate of ``P(x' in B_j | x in B_i)``.

    ``rule="cell_mass"`` (default) integrates both estimators over the cells
    in closed form through the kernel CDF and divides::

        P_ij = P_kde(x in B_i, x' in B_j) / P_kde(x in B_i)

    which is the Bayes ratio of the Ulam matrix with KDE in place of
    occupancy counts.  ``rule="center"`` evaluates the density ratio
    ``p(x, x') / p(x)`` at cell-centre pairs times the cell width; it is only
    accurate when the bandwidths are wide compared with ``1/K``.

    With ``boundary="clamp"`` kernel mass spilling past 0 or 1 is credited
    to the first or last cell, so no mass is lost near the endpoints; with
    ``"discard"`` it is dropped.  Rows are then renormalised to sum to 1.
    Rows whose marginal falls below ``MARGINAL_FLOOR`` are set uniform and
    flagged.
    """
    if len(s) == 0:
        raise ValueError("empty sample set")
    if K < 1:
        raise ValueError("K must be at least 1")
    kernel = as_kernel(kernel)
    joint = kde_fit(s.pairs, delta_joint, kernel, dim=2)
    d1, d2 = joint.delta
    if not (np.isfinite(delta_marginal) and delta_marginal > 0):
        raise ValueError(f"bandwidth must be positive, got {delta_marginal}")
    code = kernel.kind.code
    if boundary not in ("clamp", "discard"):
        raise ValueError(f"unknown boundary {boundary!r}; expected 'clamp' or 'discard'")
    if rule == "cell_mass":
        edges = np.linspace(0.0, 1.0, K + 1)
        if boundary == "clamp":
            edges[0], edges[-1] = -np.inf, np.inf
        n = len(s)
        marg = kernels.cell_mass_1d(s.x, edges, float(delta_marginal), code) / n
        pair = kernels.cell_mass_2d(s.x, s.x_next, edges, edges, d1, d2, code) / n
    elif rule == "center":
        centers = (np.arange(K) + 0.5) / K
        marg = kde_eval(kde_fit(s.x, delta_marginal, kernel), centers)
        pair = kde_eval_grid(joint, centers, centers) / K
    else:
        raise ValueError(f"unknown rule {rule!r}; expected 'cell_mass' or 'center'")
    ok = marg > MARGINAL_FLOOR
    cond = np.zeros_like(pair)
    cond[ok] = pair[ok] / marg[ok, None]
    P, empty = _normalise_rows(cond)
    return StochasticMatrix(P, Method.KDE_CONDITIONAL, empty | ~ok, {
        "N": len(s), "kernel": kernel.kind.value, "delta_marginal": float(delta_marginal),
        "delta_joint": [d1, d2], "rule": rule, "boundary": boundary,
        "sample_mode": s.mode.value, "seed": int(s.seed)})


def noisy_kernel_matrix_exact(spec: MapSpec, K: int, quad_points_per_cell: int = 1) -> StochasticMatrix:
    """Truncated-normal transition mass of each ``B_j``.

    With the default ``quad_points_per_cell=1`` the kernel is taken from the
    cell centre ``x_i*``.  Larger values average the row over that many
    midpoints of ``B_i`` (the Lebesgue-weighted Ulam matrix of the noisy map).
    Rows telescope through the CDF, so they sum to 1 up to rounding.
    """
    if spec.noise is None:
        raise ValueError("noisy_kernel_matrix_exact needs a map with noise")
    M = int(quad_points_per_cell)
    if K < 1 or M < 1:
        raise ValueError("K and quad_points_per_cell must be positive")
    x = (np.arange(K)[:, None] + (np.arange(M)[None, :] + 0.5) / M) / K
    mu = spec.deterministic(x.ravel())
    edges = np.linspace(0.0, 1.0, K + 1)
    try:
        F = truncated_normal_cdf(edges[None, :], mu[:, None], spec.noise)
    except NumericalError as exc:
        raise NumericalError(f"transition kernel underflow: {exc}") from exc
    P = np.diff(F, axis=1).reshape(K, M, K).mean(axis=1)
    return StochasticMatrix(P, Method.NOISY_KERNEL_EXACT, None,
                            {"sigma": spec.noise.sigma, "map": spec.name.value,
                             "params": list(spec.params), "quad_points_per_cell": M})


def apply_fp_exact(spec: MapSpec, rho, x):
    """Transfer operator applied to density ``rho`` by summing over preimages.

    ``P[rho](x) = sum_{f(y) = x} rho(y) / |f'(y)|``.  For the logistic map
    the preimages are ``(1 ± sqrt(1 - 4x/r)) / 2`` with ``|f'| = r sqrt(1 - 4x/r)``;
    the critical value ``x = r/4`` is singular and rejected.
    """
    if spec.noise is not None:
        raise ValueError("apply_fp_exact needs a noiseless map")
    xs = np.asarray(x, dtype=np.float64)
    if np.any((xs < 0.0) | (xs > 1.0)):
        raise DomainError("x outside [0, 1]", np.flatnonzero(np.ravel((xs < 0) | (xs > 1))).tolist())
    if spec.name is MapKind.LOGISTIC:
        r = spec.r
        disc = 1.0 - 4.0 * xs / r
        if np.any(disc == 0.0):
            raise NumericalError(f"x = {r / 4} is the critical value; the derivative vanishes at its preimage")
        root = np.sqrt(np.where(disc > 0, disc, 1.0))
        deriv = r * root
        # rationalised small root avoids cancellation as x -> 0
        y_lo = 2.0 * xs / (r * (1.0 + root))
        out = (rho(y_lo) + rho(0.5 * (1.0 + root))) / deriv
        out = np.where(disc > 0, out, 0.0)
    else:
        if spec.preimages is None or spec.derivative is None:
            raise ValueError("custom maps need preimages and derivative callables")
        flat = []
        for xv in np.ravel(xs):
            total = 0.0
            for y in spec.preimages(xv):
                dy = abs(spec.derivative(y))
                if dy == 0.0:
                    raise NumericalError(f"zero derivative at preimage {y} of {xv}")
                total += rho(y) / dy
            flat.append(total)
        out = np.reshape(flat, xs.shape)
    return float(out) if np.ndim(out) == 0 else out


def push_density(P: StochasticMatrix, v):
    """Left action ``v^T P`` of the matrix on a probability vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (P.K,):
        raise ValueError(f"vector of length {v.shape} does not match K={P.K}")
    return v @ P.entries


def row_tv(P, Q):
    """Per-row total-variation distance between two stochastic matrices."""
    A = P.entries if isinstance(P, StochasticMatrix) else np.asarray(P)
    B = Q.entries if isinstance(Q, StochasticMatrix) else np.asarray(Q)
    return 0.5 * np.abs(A - B).sum(axis=1)

"""Kernel density estimation in one and two dimensions.

Two kernels are provided, both normalised to unit mass:

* Gaussian ``exp(-z^2/2) / sqrt(2 pi)``, treated as zero for ``|z| > 40``
  (the neglected mass is below 1e-300);
* Epanechnikov ``3/4 (1 - z^2)`` on ``[-1, 1]``.

No boundary correction is applied; on [0, 1] the estimator loses the mass
that the kernels spill past the endpoints.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from ._backend import kernels

_KIND_CODES = {"gaussian": 0, "epanechnikov": 1}


class KernelKind(str, Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    @property
    def code(self):
        return _KIND_CODES[self.value]


def kernel_moments(kind):
    """Closed-form ``(c, d)``: second moment and roughness ``int K^2``."""
    kind = KernelKind(kind)
    if kind is KernelKind.GAUSSIAN:
        return 1.0, 1.0 / (2.0 * math.sqrt(math.pi))
    return 0.2, 0.6


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    c: float
    d: float

    @classmethod
    def of(cls, kind):
        kind = KernelKind(kind)
        return cls(kind, *kernel_moments(kind))


def as_kernel(kernel):
    return kernel if isinstance(kernel, KernelSpec) else KernelSpec.of(kernel)


def kernel_eval(kernel, z):
    kernel = as_kernel(kernel)
    z = np.asarray(z, dtype=np.float64)
    if kernel.kind is KernelKind.GAUSSIAN:
        out = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    else:
        out = np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class KdeDensity:
    """Fitted KDE.

    For ``dim == 1`` ``samples`` is sorted ascending and ``delta`` a float.
    For ``dim == 2`` ``samples`` is ``(N, 2)`` sorted by the first column and
    ``delta`` is the pair ``(delta_1, delta_2)`` of the diagonal scaling.
    """

    samples: np.ndarray
    delta: object
    kernel: KernelSpec
    dim: int

    @property
    def N(self):
        return self.samples.shape[0]

    def __call__(self, x):
        return kde_eval(self, x)

    def to_json(self, sample_file=None):
        delta = list(self.delta) if self.dim == 2 else self.delta
        return {"kind": self.kernel.kind.value, "delta": delta, "N": self.N,
                "dim": self.dim, "samples": None if sample_file is None else str(sample_file)}

    def save(self, path, sample_file=None):
        Path(path).write_text(json.dumps(self.to_json(sample_file), indent=2, sort_keys=True) + "\n")


def kde_fit(samples, delta, kernel="gaussian", dim=1) -> KdeDensity:
    kernel = as_kernel(kernel)
    pts = np.asarray(samples, dtype=np.float64)
    if dim == 1:
        pts = np.sort(pts.ravel())
        if not (np.isfinite(delta) and delta > 0):
            raise ValueError(f"bandwidth must be positive, got {delta}")
        delta = float(delta)
    elif dim == 2:
        pts = pts.reshape(-1, 2)
        pts = pts[np.argsort(pts[:, 0], kind="stable")]
        if np.ndim(delta) == 0:
            delta = (delta, delta)
        delta = tuple(float(v) for v in delta)
        if len(delta) != 2 or not all(np.isfinite(v) and v > 0 for v in delta):
            raise ValueError(f"bandwidths must be positive, got {delta}")
    else:
        raise ValueError("dim must be 1 or 2")
    if pts.shape[0] < 1:
        raise ValueError("need at least one sample")
    pts.flags.writeable = False
    return KdeDensity(pts, delta, kernel, dim)


def kde_eval(kde: KdeDensity, x):
    """Evaluate the estimator at point(s) ``x`` (any real location)."""
    code = kde.kernel.kind.code
    if kde.dim == 1:
        q = np.asarray(x, dtype=np.float64)
        out = kernels.kde1d_eval(kde.samples, q.ravel(), kde.delta, code).reshape(q.shape)
        return float(out) if out.ndim == 0 else out
    q = np.asarray(x, dtype=np.float64)
    if q.shape[-1] != 2:
        raise ValueError("2-D KDE points must have shape (2,) or (M, 2)")
    flat = q.reshape(-1, 2)
    d1, d2 = kde.delta
    out = kernels.kde2d_eval(kde.samples[:, 0], kde.samples[:, 1], flat[:, 0], flat[:, 1], d1, d2, code)
    out = out.reshape(q.shape[:-1])
    return float(out) if out.ndim == 0 else out


def kde_eval_grid(kde: KdeDensity, gx, gy):
    """2-D estimator on the tensor grid ``gx`` x ``gy`` (both ascending)."""
    if kde.dim != 2:
        raise ValueError("grid evaluation needs a 2-D KDE")
    d1, d2 = kde.delta
    return kernels.kde2d_grid(kde.samples[:, 0], kde.samples[:, 1],
                              np.asarray(gx, float), np.asarray(gy, float), d1, d2,
                              kde.kernel.kind.code)


def kde_bias_bound(delta, p_second, c):
    """Leading-order signed bias ``(c/2) delta^2 p''``."""
    return 0.5 * c * delta ** 2 * p_second


def kde_mse_upper_bound(delta, N, p_at, p_second, kernel="gaussian"):
    """Leading terms ``(c^2/4) delta^4 p''^2 + d p / (delta N)``."""
    k = as_kernel(kernel)
    delta = np.asarray(delta, dtype=np.float64)
    out = 0.25 * k.c ** 2 * delta ** 4 * p_second ** 2 + k.d * p_at / (delta * N)
    return float(out) if out.ndim == 0 else out


class OptimalBandwidth(NamedTuple):
    delta: float
    exponent: float  # delta scales as N ** exponent
    constant: float  # delta * N ** -exponent


def kde_optimal_delta(N, p_at, p_second, kernel="gaussian", dim=1) -> OptimalBandwidth:
    """Bandwidth minimising :func:`kde_mse_upper_bound`.

    In 1-D the minimiser is found numerically (root of the derivative in
    log-bandwidth).  For ``dim == 2`` the 1-D constant is reused with the
    multivariate rate ``N^(-1/(4+dim))``.
    """
    k = as_kernel(kernel)
    if p_second == 0:
        raise ValueError("p_second == 0: the bias term vanishes and the bound has no finite minimiser")
    if p_at <= 0 or N < 1:
        raise ValueError("need p_at > 0 and N >= 1")
    bias_coef = k.c ** 2 * p_second ** 2
    var_coef = k.d * p_at / N

    # delta * dUB/ddelta = bias_coef*delta^4 - var_coef/delta, monotone in t = log(delta)
    def slope(t):
        return math.log(bias_coef) + 5.0 * t - math.log(var_coef)

    lo, hi = -50.0, 50.0
    t = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    delta1 = math.exp(t)
    if dim == 1:
        return OptimalBandwidth(delta1, -0.2, delta1 * N ** 0.2)
    const = delta1 * N ** 0.2
    exponent = -1.0 / (4 + dim)
    return OptimalBandwidth(const * N ** exponent, exponent, const)

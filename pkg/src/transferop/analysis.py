"""Reference densities, pointwise MSE, bandwidth sweeps and rate fits.

Error figures are computed against an analytic reference density on the
100-point grid over [0.01, 0.99].  Each seed gives one realisation of the
squared error (what a single experiment shows); the median or mean over
seeds is reported separately as the statistical summary.

Samples for the logistic experiments come from
:func:`transferop.dynamics.generate_evolved_ensemble`: uniform initial
conditions pushed forward so the inputs follow the invariant density.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import histdens, kde
from .dynamics import DEFAULT_EVOLVE_STEPS, MapSpec, NoiseSpec, generate_evolved_ensemble
from .dynamics import truncated_normal_cdf, truncated_normal_pdf

UB_POINT = 0.99


@dataclass(frozen=True)
class ReferenceDensity:
    name: str
    value: Callable
    first_derivative: Callable
    second_derivative: Callable
    cdf: Callable

    def __call__(self, x):
        return self.value(x)

    def cell_masses(self, K):
        """Exact probability of each of the K uniform cells."""
        return np.diff(self.cdf(np.linspace(0.0, 1.0, K + 1)))


def logistic_arcsine():
    """Invariant density ``1 / (pi sqrt(x (1 - x)))`` of the r = 4 logistic map."""

    def value(x):
        x = np.asarray(x, dtype=np.float64)
        return 1.0 / (np.pi * np.sqrt(x * (1.0 - x)))

    def d1(x):
        x = np.asarray(x, dtype=np.float64)
        return (2.0 * x - 1.0) / (2.0 * np.pi * np.sqrt(x * (1.0 - x)) ** 3)

    def d2(x):
        x = np.asarray(x, dtype=np.float64)
        u = x - x * x
        return (0.75 * u ** -2.5 * (1.0 - 2.0 * x) ** 2 + u ** -1.5) / np.pi

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        return 2.0 / np.pi * np.arcsin(np.sqrt(x))

    return ReferenceDensity("logistic_arcsine", value, d1, d2, cdf)


def trunc_normal(mu=0.5, sigma=0.15, lower=0.0, upper=1.0):
    ns = NoiseSpec(sigma, lower, upper)

    def value(x):
        return truncated_normal_pdf(x, mu, ns)

    def d1(x):
        z = (np.asarray(x, dtype=np.float64) - mu) / sigma
        return -z / sigma * value(x)

    def d2(x):
        z = (np.asarray(x, dtype=np.float64) - mu) / sigma
        return (z * z - 1.0) / sigma ** 2 * value(x)

    def cdf(x):
        return truncated_normal_cdf(x, mu, ns)

    return ReferenceDensity("trunc_normal", value, d1, d2, cdf)


def uniform():
    def value(x):
        return np.ones_like(np.asarray(x, dtype=np.float64))

    def zero(x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def cdf(x):
        return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)

    return ReferenceDensity("uniform", value, zero, zero, cdf)


REFERENCES = {"logistic_arcsine": logistic_arcsine, "trunc_normal": trunc_normal, "uniform": uniform}


class UbConstants(NamedTuple):
    C1: float  # |p'| at the evaluation point
    p: float
    p_second: float
    x: float


def ub_constants(ref: ReferenceDensity = None, x=UB_POINT) -> UbConstants:
    """Bound constants taken from the reference density at ``x``.

    For the arcsine density both ``|p'|`` and ``p''`` grow towards the
    endpoints, so ``x = 0.99`` gives the supremum over the evaluation grid.
    """
    ref = ref or logistic_arcsine()
    return UbConstants(float(abs(ref.first_derivative(x))), float(ref.value(x)),
                       float(ref.second_derivative(x)), x)


def evaluation_grid(n=100, lo=0.01, hi=0.99):
    return np.linspace(lo, hi, n)


def invariant_samples(N, seed, spec=None, steps=DEFAULT_EVOLVE_STEPS):
    """``N`` inputs drawn from (approximately) the invariant density."""
    spec = spec or MapSpec.logistic()
    return generate_evolved_ensemble(spec, int(N), steps=steps, seed=seed).x


def derived_seed(seed, *keys):
    """Deterministic 64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(eq=False)
class ErrorReport:
    """Squared errors over a parameter sweep.

    ``mse_pointwise`` has shape ``(n_params, n_seeds, n_grid)``; entry
    ``[p, s, g]`` is the single-realisation squared error at grid point
    ``g`` for parameter ``p`` and seed ``s``.
    """

    method: str
    N: int
    grid: np.ndarray
    parameters: np.ndarray
    seeds: list
    mse_pointwise: np.ndarray
    ub: np.ndarray
    ub_argmin: float = math.nan
    constants: UbConstants = None
    runtime: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def mse_mean(self):
        """Grid-mean squared error, shape ``(n_params, n_seeds)``."""
        return self.mse_pointwise.mean(axis=2)

    def median_mse(self):
        """Per-parameter median over seeds of the grid-mean squared error."""
        return np.median(self.mse_mean, axis=1)

    def mse_expected(self):
        """Seed-averaged pointwise squared error (estimate of the true MSE)."""
        return self.mse_pointwise.mean(axis=1)

    @property
    def ub_curve(self):
        return np.column_stack([self.parameters, self.ub])

    @property
    def optimum(self):
        """``(parameter, UB)`` at the smallest swept UB value."""
        i = int(np.argmin(self.ub))
        return float(self.parameters[i]), float(self.ub[i])

    def summary(self):
        out = {
            "method": self.method,
            "N": int(self.N),
            "seeds": [int(s) for s in self.seeds],
            "parameters": [float(p) for p in self.parameters],
            "median_mse": [float(v) for v in self.median_mse()],
            "ub": [float(v) for v in self.ub],
            "optimum": {"parameter": self.optimum[0], "ub": self.optimum[1]},
            "ub_argmin": float(self.ub_argmin),
        }
        if self.constants is not None:
            out["constants"] = self.constants._asdict()
        out.update(self.extra)
        return out

    def write(self, csv_path, json_path=None):
        """Long-format CSV ``method,N,parameter,seed,mse_mean,ub`` plus JSON summary."""
        means = self.mse_mean
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("method,N,parameter,seed,mse_mean,ub\n")
            for p, param in enumerate(self.parameters):
                for s, seed in enumerate(self.seeds):
                    fh.write(f"{self.method},{int(self.N)},{param:.17g},{int(seed)},"
                             f"{means[p, s]:.17g},{self.ub[p]:.17g}\n")
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def pointwise_mse(estimator, reference: ReferenceDensity, grid=None) -> ErrorReport:
    """Squared error of one fitted estimator against ``reference`` on ``grid``."""
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    err = (np.asarray(estimator(grid), dtype=np.float64) - reference.value(grid)) ** 2
    return ErrorReport("single", 0, grid, np.array([math.nan]), [0], err[None, None, :], np.array([math.nan]))


def _map_seeds(fn, seeds, threads):
    if threads is None or threads <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


def _sweep(method, N, params, seeds, fit, ub, ub_argmin, reference, grid, regenerate, threads,
           constants, extra=None):
    t0 = time.perf_counter()
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    truth = reference.value(grid)
    seeds = [int(s) for s in seeds]
    if len(params) == 0:
        raise ValueError("parameter list is empty")
    if len(seeds) == 0:
        raise ValueError("seed list is empty")

    def per_seed(seed):
        rows = np.empty((len(params), grid.shape[0]))
        shared = None if regenerate else invariant_samples(N, seed)
        for p, param in enumerate(params):
            data = invariant_samples(N, derived_seed(seed, p)) if regenerate else shared
            rows[p] = (fit(data, param)(grid) - truth) ** 2
        return rows

    results = _map_seeds(per_seed, seeds, threads)
    err = np.stack(results, axis=1)
    return ErrorReport(method, int(N), grid, np.asarray(params, dtype=np.float64), seeds, err,
                       np.asarray(ub, dtype=np.float64), ub_argmin, constants,
                       time.perf_counter() - t0, extra or {})


def sweep_histogram(N, K_list, seeds, reference=None, grid=None, ub_point=UB_POINT,
                    regenerate=False, threads=1) -> ErrorReport:
    """Histogram error for each bin count in ``K_list`` and the UB curve."""
    reference = reference or logistic_arcsine()
    c = ub_constants(reference, ub_point)
    K_list = [int(k) for k in K_list]
    ub = [histdens.hist_mse_upper_bound(k, N, c.C1, c.p) for k in K_list]
    k_formula, k_argmin = histdens.hist_optimal_K(N, c.C1, c.p)
    return _sweep("hist", N, K_list, seeds, lambda x, K: histdens.hist_fit(x, K), ub, k_argmin,
                  reference, grid, regenerate, threads, c, {"K_formula": k_formula})


def sweep_kde(N, delta_list, seeds, kernel="gaussian", reference=None, grid=None, ub_point=UB_POINT,
              regenerate=False, threads=1) -> ErrorReport:
    """KDE error for each bandwidth in ``delta_list`` and the UB curve."""
    reference = reference or logistic_arcsine()
    c = ub_constants(reference, ub_point)
    ub = [kde.kde_mse_upper_bound(d, N, c.p, c.p_second, kernel) for d in delta_list]
    opt = kde.kde_optimal_delta(N, c.p, c.p_second, kernel)
    return _sweep("kde", N, list(delta_list), seeds, lambda x, d: kde.kde_fit(x, d, kernel), ub,
                  opt.delta, reference, grid, regenerate, threads, c, {"kernel": kde.KernelSpec.of(kernel).kind.value})


def optimal_parameter(method, N, constants: UbConstants, kernel="gaussian"):
    """UB-optimal bin count (histogram) or bandwidth (KDE) for sample size ``N``."""
    if method == "hist":
        return histdens.hist_optimal_K(N, constants.C1, constants.p)[1]
    if method == "kde":
        return kde.kde_optimal_delta(N, constants.p, constants.p_second, kernel).delta
    raise ValueError(f"unknown method {method!r}; expected 'hist' or 'kde'")


def fit_at(method, data, param, kernel="gaussian"):
    if method == "hist":
        return histdens.hist_fit(data, int(param))
    return kde.kde_fit(data, param, kernel)


def compare_at_optimum(N, seeds, kernel="gaussian", reference=None, grid=None, ub_point=UB_POINT,
                       threads=1):
    """Pointwise error of histogram(K_opt) and KDE(delta_opt) on shared samples.

    Returns ``(grid, hist_err, kde_err, K_opt, delta_opt)`` where the error
    arrays have shape ``(n_seeds, n_grid)``.
    """
    reference = reference or logistic_arcsine()
    c = ub_constants(reference, ub_point)
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    truth = reference.value(grid)
    K_opt = optimal_parameter("hist", N, c)
    d_opt = optimal_parameter("kde", N, c, kernel)

    def per_seed(seed):
        x = invariant_samples(N, seed)
        return ((histdens.hist_fit(x, K_opt)(grid) - truth) ** 2,
                (kde.kde_fit(x, d_opt, kernel)(grid) - truth) ** 2)

    res = _map_seeds(per_seed, [int(s) for s in seeds], threads)
    return grid, np.array([r[0] for r in res]), np.array([r[1] for r in res]), K_opt, d_opt


class RateFit(NamedTuple):
    method: str
    slope: float  # median over seeds
    per_seed: np.ndarray
    N_list: np.ndarray
    mse: np.ndarray  # (n_seeds, n_N) grid-mean squared error
    parameters: np.ndarray


def convergence_rate(method, N_list, seeds, kernel="gaussian", reference=None, grid=None,
                     ub_point=UB_POINT, threads=1) -> RateFit:
    """Log-log slope of grid-mean squared error against N at UB-optimal parameters.

    One least-squares slope is fitted per seed; the reported slope is their
    median.  Each ``(seed, N)`` pair gets its own sample set.
    """
    N_list = np.asarray(sorted(int(n) for n in N_list))
    if N_list.shape[0] < 3:
        raise ValueError("need at least three sample sizes for a rate fit")
    reference = reference or logistic_arcsine()
    c = ub_constants(reference, ub_point)
    grid = evaluation_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    truth = reference.value(grid)
    params = np.array([optimal_parameter(method, n, c, kernel) for n in N_list], dtype=np.float64)

    def per_seed(seed):
        out = np.empty(N_list.shape[0])
        for k, n in enumerate(N_list):
            x = invariant_samples(n, derived_seed(seed, n))
            out[k] = np.mean((fit_at(method, x, params[k], kernel)(grid) - truth) ** 2)
        return out

    mse = np.array(_map_seeds(per_seed, [int(s) for s in seeds], threads))
    usable = np.all(mse > 0, axis=0) & np.all(np.isfinite(mse), axis=0)
    if usable.sum() < 3:
        raise ValueError("fewer than three usable points for the rate fit")
    logN = np.log(N_list[usable])
    slopes = np.array([np.polyfit(logN, np.log(row[usable]), 1)[0] for row in mse])
    return RateFit(method, float(np.median(slopes)), slopes, N_list, mse, params)

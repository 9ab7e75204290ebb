"""One-dimensional maps, truncated-normal noise and sample generation.

Samples are produced as input/output pairs ``(x_n, x_{n+1})``.  Three
sampling modes are supported:

``orbit``
    a single long trajectory after a burn-in transient;
``iid_uniform``
    i.i.d. uniform inputs mapped once (Lebesgue-weighted pairs);
``evolved_ensemble``
    i.i.d. uniform initial conditions pushed forward for many steps, so the
    inputs are (approximately) independent draws from the invariant density.

All randomness comes from a single :class:`numpy.random.PCG64` stream
seeded with a 64-bit unsigned integer, so identical seeds reproduce
bit-identical sample sets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import erfc

from ._backend import kernels
from ._pykernels import MIN_MASS
from .errors import DomainError, NumericalError, check_unit_interval

DEFAULT_BURN_IN = 1000
DEFAULT_X0 = 0.3141592653
DEFAULT_EVOLVE_STEPS = 100

_SQRT2 = math.sqrt(2.0)


class MapKind(str, Enum):
    LOGISTIC = "logistic"
    CUSTOM = "custom"


class SampleMode(str, Enum):
    ORBIT = "orbit"
    IID_UNIFORM = "iid_uniform"
    EVOLVED = "evolved_ensemble"


@dataclass(frozen=True)
class NoiseSpec:
    """Normal kick of standard deviation ``sigma`` truncated to [lower, upper]."""

    sigma: float
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class MapSpec:
    """A named interval map, optionally with truncated-normal noise.

    For ``MapKind.CUSTOM`` the caller supplies ``func`` (vectorised over
    numpy arrays).  ``preimages`` and ``derivative`` are only needed by
    :func:`transferop.operator.apply_fp_exact`.
    """

    name: MapKind = MapKind.LOGISTIC
    params: tuple = (4.0,)
    noise: Optional[NoiseSpec] = None
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    preimages: Optional[Callable] = field(default=None, compare=False, repr=False)
    derivative: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "name", MapKind(self.name))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("map parameters must be finite")
        if self.name is MapKind.LOGISTIC:
            if len(self.params) != 1:
                raise ValueError("logistic map takes exactly one parameter r")
            if not 0.0 < self.params[0] <= 4.0:
                raise ValueError(f"logistic r must lie in (0, 4], got {self.params[0]}")
        elif self.func is None:
            raise ValueError("custom maps need a func")

    @classmethod
    def logistic(cls, r=4.0, sigma=None):
        noise = None if sigma is None else NoiseSpec(sigma)
        return cls(MapKind.LOGISTIC, (r,), noise)

    @classmethod
    def custom(cls, func, params=(), noise=None, preimages=None, derivative=None):
        return cls(MapKind.CUSTOM, tuple(params), noise, func, preimages, derivative)

    @property
    def r(self):
        if self.name is not MapKind.LOGISTIC:
            raise AttributeError("only the logistic map has a multiplier r")
        return self.params[0]

    @property
    def sigma(self):
        return None if self.noise is None else self.noise.sigma

    def without_noise(self):
        return MapSpec(self.name, self.params, None, self.func, self.preimages, self.derivative)

    def deterministic(self, x):
        """Deterministic image without domain checks (vectorised)."""
        if self.name is MapKind.LOGISTIC:
            r = self.params[0]
            return r * x * (1.0 - x)
        return self.func(x)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Ordered input/output pairs with provenance metadata."""

    x: np.ndarray
    x_next: np.ndarray
    mode: SampleMode
    seed: int
    burn_in: int
    map_name: str = "logistic"
    params: tuple = (4.0,)
    sigma: Optional[float] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        xn = np.array(self.x_next, dtype=np.float64)
        if x.shape != xn.shape or x.ndim != 1:
            raise ValueError("x and x_next must be 1-D arrays of equal length")
        check_unit_interval(x, "x")
        check_unit_interval(xn, "x_next")
        x.flags.writeable = False
        xn.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x_next", xn)
        object.__setattr__(self, "mode", SampleMode(self.mode))

    def __len__(self):
        return self.x.shape[0]

    @property
    def pairs(self):
        """``(N, 2)`` array of ``(x, x_next)`` rows."""
        return np.column_stack([self.x, self.x_next])

    def metadata(self):
        return {
            "mode": self.mode.value,
            "seed": int(self.seed),
            "burn_in": int(self.burn_in),
            "map": self.map_name,
            "params": list(self.params),
            "sigma": self.sigma,
            "n": len(self),
        }

    def to_csv(self, path):
        """Write ``x,x_next`` CSV (17 significant digits) plus a JSON sidecar."""
        path = Path(path)
        with open(path, "w", newline="\n") as fh:
            fh.write("x,x_next\n")
            np.savetxt(fh, self.pairs, fmt="%.17g", delimiter=",")
        sidecar_path(path).write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with open(path) as fh:
            header = fh.readline().strip()
        if header != "x,x_next":
            raise ValueError(f"{path}: expected header 'x,x_next', got {header!r}")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = {}
        side = sidecar_path(path)
        if side.exists():
            meta = json.loads(side.read_text())
        return cls(
            data[:, 0], data[:, 1],
            mode=meta.get("mode", SampleMode.ORBIT.value),
            seed=meta.get("seed", 0),
            burn_in=meta.get("burn_in", 0),
            map_name=meta.get("map", "logistic"),
            params=tuple(meta.get("params", (4.0,))),
            sigma=meta.get("sigma"),
        )


def sidecar_path(path):
    path = Path(path)
    return path.with_suffix(".json")


def make_rng(seed):
    """PCG64 generator from a 64-bit unsigned seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def apply_map(spec: MapSpec, x):
    """Deterministic image ``f(x)``; noise is never applied here."""
    arr = check_unit_interval(x)
    out = spec.deterministic(arr)
    return float(out) if np.ndim(x) == 0 else out


def _phi_interval(alpha, beta):
    """``Phi(beta) - Phi(alpha)`` evaluated in the tail with better precision."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    upper = alpha > 0
    lo = np.where(upper, -beta, alpha)
    hi = np.where(upper, -alpha, beta)
    return 0.5 * erfc(-hi / _SQRT2) - 0.5 * erfc(-lo / _SQRT2)


def _tn_mass(mu, ns):
    mass = _phi_interval((ns.lower - mu) / ns.sigma, (ns.upper - mu) / ns.sigma)
    if np.any(mass < MIN_MASS):
        raise NumericalError(
            f"truncation mass underflows for mean {mu} with sigma {ns.sigma} on "
            f"[{ns.lower}, {ns.upper}]")
    return mass


def truncated_normal_pdf(x, mu, ns: NoiseSpec):
    """Density of N(mu, sigma^2) truncated to [lower, upper]; zero outside."""
    x = np.asarray(x, dtype=np.float64)
    mass = _tn_mass(mu, ns)
    z = (x - mu) / ns.sigma
    dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * ns.sigma * mass)
    out = np.where((x >= ns.lower) & (x <= ns.upper), dens, 0.0)
    return float(out) if out.ndim == 0 else out


def truncated_normal_cdf(x, mu, ns: NoiseSpec):
    """CDF of the truncated normal, clamped to 0 below and 1 above the support."""
    x = np.clip(np.asarray(x, dtype=np.float64), ns.lower, ns.upper)
    mu = np.asarray(mu, dtype=np.float64)
    mass = _tn_mass(mu, ns)
    part = _phi_interval((ns.lower - mu) / ns.sigma, (x - mu) / ns.sigma)
    out = np.clip(part / mass, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sample_truncated_normal(mu, ns: NoiseSpec, rng: np.random.Generator, size=None):
    """Inverse-CDF draws; one uniform is consumed per draw.

    With ``size=None`` one value is drawn per entry of ``mu``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    u = rng.random(mu.shape if size is None else size)
    mu_arr = np.broadcast_to(mu, np.shape(u))
    out = kernels.tn_sample(mu_arr, ns.sigma, ns.lower, ns.upper, u)
    if np.isnan(out).any():
        _tn_mass(mu_arr, ns)  # raises with context
    return float(out) if np.ndim(out) == 0 else out


def _step_noisy(spec, x, rng):
    ns = spec.noise
    return kernels.tn_sample(spec.deterministic(x), ns.sigma, ns.lower, ns.upper, rng.random(x.shape[0]))


def generate_orbit(spec: MapSpec, x0=DEFAULT_X0, n=1000, burn_in=DEFAULT_BURN_IN, seed=0) -> SampleSet:
    """Sample ``n`` consecutive pairs of a trajectory after ``burn_in`` steps.

    Noisy maps update by a truncated-normal draw on the noise support centred
    at ``f(x_k)``.
    """
    check_unit_interval(x0, "x0")
    if n < 1:
        raise ValueError("n must be at least 1")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rng = make_rng(seed)
    total = burn_in + n
    sigma = spec.sigma or 0.0
    if spec.name is MapKind.LOGISTIC:
        u = rng.random(total) if sigma > 0 else np.empty(0)
        states = kernels.logistic_orbit(float(x0), spec.r, total, sigma, u)
    else:
        states = _custom_orbit(spec, float(x0), total, rng)
    return SampleSet(
        states[burn_in:total], states[burn_in + 1:total + 1],
        mode=SampleMode.ORBIT, seed=seed, burn_in=burn_in,
        map_name=spec.name.value, params=spec.params, sigma=spec.sigma,
    )


def _custom_orbit(spec, x0, total, rng):
    states = np.empty(total + 1)
    states[0] = x = x0
    ns = spec.noise
    for k in range(total):
        fx = float(spec.func(x))
        if ns is not None:
            fx = kernels.tn_draw(fx, ns.sigma, ns.lower, ns.upper, rng.random())
        if not 0.0 <= fx <= 1.0:
            raise DomainError(f"orbit left [0, 1] at iterate {k + 1} (value {fx!r})", [k + 1])
        states[k + 1] = x = fx
    return states


def _image(spec, x, rng):
    if spec.noise is None:
        y = spec.deterministic(x)
    else:
        y = _step_noisy(spec, x, rng)
    bad = ~((y >= 0.0) & (y <= 1.0))
    if bad.any():
        raise DomainError("map image left [0, 1]", np.flatnonzero(bad).tolist())
    return y


def generate_ensemble(spec: MapSpec, n: int, seed=0) -> SampleSet:
    """``n`` i.i.d. uniform inputs and their (noisy) images."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    x = rng.random(n)
    return SampleSet(
        x, _image(spec, x, rng), mode=SampleMode.IID_UNIFORM, seed=seed, burn_in=0,
        map_name=spec.name.value, params=spec.params, sigma=spec.sigma,
    )


def generate_evolved_ensemble(spec: MapSpec, n: int, steps=DEFAULT_EVOLVE_STEPS, seed=0) -> SampleSet:
    """Uniform initial conditions pushed ``steps`` times, then paired with their images.

    The inputs are independent draws from (an approximation of) the
    invariant density, which keeps the variance formulas for i.i.d. data
    applicable.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    x = rng.random(n)
    if spec.noise is None and spec.name is MapKind.LOGISTIC:
        x = kernels.logistic_evolve(x, spec.r, steps)
    else:
        for _ in range(steps):
            x = _image(spec, x, rng)
    return SampleSet(
        x, _image(spec, x, rng), mode=SampleMode.EVOLVED, seed=seed, burn_in=steps,
        map_name=spec.name.value, params=spec.params, sigma=spec.sigma,
    )

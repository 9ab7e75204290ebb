"""Pure-Python/numpy implementations of the numerical kernels.

Every function here has a twin with the same signature in the compiled
``_ckernels`` extension.  This module is used when the extension is not
built, or when ``TRANSFEROP_BACKEND=python`` is set.

Kernel kinds are passed as small integers: 0 = Gaussian, 1 = Epanechnikov.
"""
import math

import numpy as np
from scipy.special import erfc

GAUSSIAN = 0
EPANECHNIKOV = 1

# |z| beyond which the Gaussian kernel is treated as exactly zero
GAUSS_CUTOFF = 40.0

# truncation masses below the smallest normal double count as underflow
MIN_MASS = 2.2250738585072014e-308

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Rational approximation of the standard normal quantile (relative error
# about 1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549671010228720e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _ndtri_scalar(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        z = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        z = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        z = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    # one Newton step on Phi(z) - p
    dens = math.exp(-0.5 * z * z) / _SQRT2PI
    if dens > 0.0:
        z -= (0.5 * math.erfc(-z / _SQRT2) - p) / dens
    return z


def tn_draw(mu, sigma, a, b, u):
    """Inverse-CDF draw from N(mu, sigma^2) truncated to [a, b].

    Returns NaN when the truncation mass underflows to zero.
    """
    alpha = (a - mu) / sigma
    beta = (b - mu) / sigma
    flip = alpha > 0.0
    if flip:
        # work in the lower tail where Phi has full relative precision
        alpha, beta = -beta, -alpha
        u = 1.0 - u
    lo = 0.5 * math.erfc(-alpha / _SQRT2)
    hi = 0.5 * math.erfc(-beta / _SQRT2)
    mass = hi - lo
    if not mass >= MIN_MASS:
        return math.nan
    t = lo + u * mass
    if t <= 0.0:
        z = alpha
    elif t >= 1.0:
        z = beta
    else:
        z = _ndtri_scalar(t)
        z = min(max(z, alpha), beta)
    if flip:
        z = -z
    x = mu + sigma * z
    return min(max(x, a), b)


def tn_sample(mu, sigma, a, b, u):
    """Vectorised :func:`tn_draw` over arrays ``mu`` and ``u``."""
    mu = np.asarray(mu, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    mu, u = np.broadcast_arrays(mu, u)
    alpha = (a - mu) / sigma
    beta = (b - mu) / sigma
    flip = alpha > 0.0
    al = np.where(flip, -beta, alpha)
    be = np.where(flip, -alpha, beta)
    uu = np.where(flip, 1.0 - u, u)
    lo = 0.5 * erfc(-al / _SQRT2)
    hi = 0.5 * erfc(-be / _SQRT2)
    mass = hi - lo
    t = lo + uu * mass
    with np.errstate(divide="ignore", invalid="ignore"):
        z = _ndtri_vec(np.where((t > 0.0) & (t < 1.0), t, 0.5))
    z = np.where(t <= 0.0, al, np.where(t >= 1.0, be, z))
    z = np.minimum(np.maximum(z, al), be)
    z = np.where(flip, -z, z)
    x = np.clip(mu + sigma * z, a, b)
    return np.where(mass >= MIN_MASS, x, np.nan)


def _ndtri_vec(p):
    z = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)

    q = np.sqrt(-2.0 * np.log(p[low]))
    z[low] = (((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = np.sqrt(-2.0 * np.log(1.0 - p[high]))
    z[high] = -(((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p[mid] - 0.5
    r = q * q
    z[mid] = (((((( _A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
              / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))

    dens = np.exp(-0.5 * z * z) / _SQRT2PI
    step = np.where(dens > 0.0, (0.5 * erfc(-z / _SQRT2) - p) / np.where(dens > 0.0, dens, 1.0), 0.0)
    return z - step


def logistic_orbit(x0, r, n_steps, sigma, uniforms):
    """Iterate the (optionally noisy) logistic map ``n_steps`` times.

    Returns the ``n_steps + 1`` states including ``x0``.  With ``sigma > 0``
    each update is a truncated-normal draw on [0, 1] centred at the
    deterministic image, consuming ``uniforms[k]`` at step ``k``.
    """
    out = np.empty(n_steps + 1, dtype=np.float64)
    x = float(x0)
    out[0] = x
    if sigma > 0.0:
        for k in range(n_steps):
            x = tn_draw(r * x * (1.0 - x), sigma, 0.0, 1.0, float(uniforms[k]))
            out[k + 1] = x
    else:
        for k in range(n_steps):
            x = r * x * (1.0 - x)
            out[k + 1] = x
    return out


def logistic_evolve(x, r, n_steps):
    """Push every state in ``x`` through ``n_steps`` noiseless logistic steps."""
    y = np.array(x, dtype=np.float64, copy=True)
    for _ in range(n_steps):
        y = r * y * (1.0 - y)
    return y


def _kernel(z, kind):
    if kind == GAUSSIAN:
        return np.exp(-0.5 * z * z) / _SQRT2PI
    return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)


def _halfwidth(kind):
    return GAUSS_CUTOFF if kind == GAUSSIAN else 1.0


def kde1d_eval(sorted_samples, query, delta, kind):
    """Windowed 1-D KDE sum.  ``sorted_samples`` must be ascending."""
    s = np.asarray(sorted_samples, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    w = _halfwidth(kind) * delta
    lo = np.searchsorted(s, q - w, side="left")
    hi = np.searchsorted(s, q + w, side="right")
    out = np.empty(q.shape[0], dtype=np.float64)
    for i in range(q.shape[0]):
        z = (s[lo[i]:hi[i]] - q[i]) / delta
        out[i] = _kernel(z, kind).sum()
    return out / (delta * s.shape[0])


def kde2d_eval(xs_sorted, ys, qx, qy, d1, d2, kind):
    """Product-kernel 2-D KDE at arbitrary points; samples sorted by x."""
    xs = np.asarray(xs_sorted, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    qx = np.asarray(qx, dtype=np.float64)
    qy = np.asarray(qy, dtype=np.float64)
    hw = _halfwidth(kind)
    lo = np.searchsorted(xs, qx - hw * d1, side="left")
    hi = np.searchsorted(xs, qx + hw * d1, side="right")
    out = np.empty(qx.shape[0], dtype=np.float64)
    for i in range(qx.shape[0]):
        zx = (xs[lo[i]:hi[i]] - qx[i]) / d1
        zy = (ys[lo[i]:hi[i]] - qy[i]) / d2
        keep = np.abs(zy) <= hw
        out[i] = (_kernel(zx[keep], kind) * _kernel(zy[keep], kind)).sum()
    return out / (xs.shape[0] * d1 * d2)


def kde2d_grid(xs, ys, gx, gy, d1, d2, kind, chunk=65536):
    """Product-kernel 2-D KDE on the tensor grid ``gx`` x ``gy``.

    Separable form: the grid sum is a sum of outer products, accumulated as
    a matrix product over sample chunks.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    out = np.zeros((gx.shape[0], gy.shape[0]), dtype=np.float64)
    for start in range(0, xs.shape[0], chunk):
        a = _kernel((xs[None, start:start + chunk] - gx[:, None]) / d1, kind)
        b = _kernel((ys[None, start:start + chunk] - gy[:, None]) / d2, kind)
        out += a @ b.T
    return out / (xs.shape[0] * d1 * d2)


def _kernel_cdf(z, kind):
    if kind == GAUSSIAN:
        return 0.5 * erfc(-z / _SQRT2)
    zc = np.clip(z, -1.0, 1.0)
    return 0.5 + 0.75 * zc - 0.25 * zc * zc * zc


def cell_mass_1d(xs, edges, delta, kind):
    """Sum over samples of the kernel mass falling in each cell ``[e_i, e_{i+1})``."""
    xs = np.asarray(xs, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.float64)
    out = np.zeros(edges.shape[0] - 1)
    for start in range(0, xs.shape[0], 65536):
        F = _kernel_cdf((edges[:, None] - xs[None, start:start + 65536]) / delta, kind)
        out += np.diff(F, axis=0).sum(axis=1)
    return out


def cell_mass_2d(xs, ys, edges_x, edges_y, d1, d2, kind, chunk=32768):
    """Sum over samples of the product-kernel mass in each cell pair."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ex = np.asarray(edges_x, dtype=np.float64)
    ey = np.asarray(edges_y, dtype=np.float64)
    out = np.zeros((ex.shape[0] - 1, ey.shape[0] - 1))
    for start in range(0, xs.shape[0], chunk):
        a = np.diff(_kernel_cdf((ex[:, None] - xs[None, start:start + chunk]) / d1, kind), axis=0)
        b = np.diff(_kernel_cdf((ey[:, None] - ys[None, start:start + chunk]) / d2, kind), axis=0)
        out += a @ b.T
    return out

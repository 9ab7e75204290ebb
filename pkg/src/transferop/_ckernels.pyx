# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.  Mirrors ``_pykernels`` function for function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, log, sqrt, fabs, NAN

cnp.import_array()

DEF GAUSS_CUTOFF = 40.0
DEF P_LOW = 0.02425
DEF SQRT2 = 1.4142135623730951
DEF SQRT2PI = 2.5066282746310002
DEF MIN_MASS = 2.2250738585072014e-308

cdef double A0 = -3.969683028665376e+01, A1 = 2.209460984245205e+02
cdef double A2 = -2.759285104469687e+02, A3 = 1.383577518672690e+02
cdef double A4 = -3.066479806614716e+01, A5 = 2.506628277459239e+00
cdef double B0 = -5.447609879822406e+01, B1 = 1.615858368580409e+02
cdef double B2 = -1.556989798598866e+02, B3 = 6.680131188771972e+01
cdef double B4 = -1.328068155288572e+01
cdef double C0 = -7.784894002430293e-03, C1 = -3.223964580411365e-01
cdef double C2 = -2.400758277161838e+00, C3 = -2.549671010228720e+00
cdef double C4 = 4.374664141464968e+00, C5 = 2.938163982698783e+00
cdef double D0 = 7.784695709041462e-03, D1 = 3.224671290700398e-01
cdef double D2 = 2.445134137142996e+00, D3 = 3.754408661907416e+00


cdef inline double _ndtri(double p) noexcept nogil:
    cdef double q, r, z, dens
    if p < P_LOW:
        q = sqrt(-2.0 * log(p))
        z = ((((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5)
             / ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0))
    elif p > 1.0 - P_LOW:
        q = sqrt(-2.0 * log(1.0 - p))
        z = -((((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5)
              / ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        z = ((((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * q
             / (((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + 1.0))
    dens = exp(-0.5 * z * z) / SQRT2PI
    if dens > 0.0:
        z -= (0.5 * erfc(-z / SQRT2) - p) / dens
    return z


cdef inline double _tn_draw(double mu, double sigma, double a, double b, double u) noexcept nogil:
    cdef double alpha = (a - mu) / sigma
    cdef double beta = (b - mu) / sigma
    cdef double tmp, lo, hi, mass, t, z, x
    cdef bint flip = alpha > 0.0
    if flip:
        tmp = alpha
        alpha = -beta
        beta = -tmp
        u = 1.0 - u
    lo = 0.5 * erfc(-alpha / SQRT2)
    hi = 0.5 * erfc(-beta / SQRT2)
    mass = hi - lo
    if not mass >= MIN_MASS:
        return NAN
    t = lo + u * mass
    if t <= 0.0:
        z = alpha
    elif t >= 1.0:
        z = beta
    else:
        z = _ndtri(t)
        if z < alpha:
            z = alpha
        if z > beta:
            z = beta
    if flip:
        z = -z
    x = mu + sigma * z
    if x < a:
        x = a
    if x > b:
        x = b
    return x


def tn_draw(double mu, double sigma, double a, double b, double u):
    return _tn_draw(mu, sigma, a, b, u)


def tn_sample(mu, double sigma, double a, double b, u):
    mu_b, u_b = np.broadcast_arrays(np.asarray(mu, dtype=np.float64),
                                    np.asarray(u, dtype=np.float64))
    cdef const double[::1] m = np.ascontiguousarray(mu_b).ravel()
    cdef const double[::1] uu = np.ascontiguousarray(u_b).ravel()
    out = np.empty(m.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(m.shape[0]):
            o[i] = _tn_draw(m[i], sigma, a, b, uu[i])
    return out.reshape(mu_b.shape)


def logistic_orbit(double x0, double r, Py_ssize_t n_steps, double sigma, uniforms):
    out = np.empty(n_steps + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef const double[::1] u
    cdef double x = x0
    cdef Py_ssize_t k
    o[0] = x
    if sigma > 0.0:
        u = np.ascontiguousarray(uniforms, dtype=np.float64)
        with nogil:
            for k in range(n_steps):
                x = _tn_draw(r * x * (1.0 - x), sigma, 0.0, 1.0, u[k])
                o[k + 1] = x
    else:
        with nogil:
            for k in range(n_steps):
                x = r * x * (1.0 - x)
                o[k + 1] = x
    return out


def logistic_evolve(x, double r, Py_ssize_t n_steps):
    out = np.array(x, dtype=np.float64, copy=True)
    cdef double[::1] y = out
    cdef Py_ssize_t i, k
    cdef double v
    with nogil:
        for i in range(y.shape[0]):
            v = y[i]
            for k in range(n_steps):
                v = r * v * (1.0 - v)
            y[i] = v
    return out


cdef inline double _kern(double z, int kind) noexcept nogil:
    if kind == 0:
        return exp(-0.5 * z * z) / SQRT2PI
    if fabs(z) <= 1.0:
        return 0.75 * (1.0 - z * z)
    return 0.0


cdef inline Py_ssize_t _lower(const double[::1] a, double v) noexcept nogil:
    # first index with a[i] >= v
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper(const double[::1] a, double v) noexcept nogil:
    # first index with a[i] > v
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def kde1d_eval(sorted_samples, query, double delta, int kind):
    cdef const double[::1] s = np.ascontiguousarray(sorted_samples, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(query, dtype=np.float64)
    out = np.empty(q.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef double w = (GAUSS_CUTOFF if kind == 0 else 1.0) * delta
    cdef double acc, qi
    cdef Py_ssize_t i, j, lo, hi
    cdef double norm = 1.0 / (delta * s.shape[0])
    with nogil:
        for i in range(q.shape[0]):
            qi = q[i]
            lo = _lower(s, qi - w)
            hi = _upper(s, qi + w)
            acc = 0.0
            for j in range(lo, hi):
                acc = acc + _kern((s[j] - qi) / delta, kind)
            o[i] = acc * norm
    return out


def kde2d_eval(xs_sorted, ys, qx, qy, double d1, double d2, int kind):
    cdef const double[::1] xs = np.ascontiguousarray(xs_sorted, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] px = np.ascontiguousarray(qx, dtype=np.float64)
    cdef const double[::1] py = np.ascontiguousarray(qy, dtype=np.float64)
    out = np.empty(px.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef double hw = GAUSS_CUTOFF if kind == 0 else 1.0
    cdef double acc, zy
    cdef Py_ssize_t i, j, lo, hi
    cdef double norm = 1.0 / (xs.shape[0] * d1 * d2)
    with nogil:
        for i in range(px.shape[0]):
            lo = _lower(xs, px[i] - hw * d1)
            hi = _upper(xs, px[i] + hw * d1)
            acc = 0.0
            for j in range(lo, hi):
                zy = (y[j] - py[i]) / d2
                if fabs(zy) <= hw:
                    acc = acc + _kern((xs[j] - px[i]) / d1, kind) * _kern(zy, kind)
            o[i] = acc * norm
    return out


def kde2d_grid(xs, ys, gx, gy, double d1, double d2, int kind, chunk=None):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] ax = np.ascontiguousarray(gx, dtype=np.float64)
    cdef const double[::1] ay = np.ascontiguousarray(gy, dtype=np.float64)
    out = np.zeros((ax.shape[0], ay.shape[0]), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] ky = np.empty(ay.shape[0], dtype=np.float64)
    cdef double hw = GAUSS_CUTOFF if kind == 0 else 1.0
    cdef double kx
    cdef Py_ssize_t n, i, j, ilo, ihi, jlo, jhi
    with nogil:
        for n in range(x.shape[0]):
            ilo = _lower(ax, x[n] - hw * d1)
            ihi = _upper(ax, x[n] + hw * d1)
            if ilo >= ihi:
                continue
            jlo = _lower(ay, y[n] - hw * d2)
            jhi = _upper(ay, y[n] + hw * d2)
            if jlo >= jhi:
                continue
            for j in range(jlo, jhi):
                ky[j] = _kern((y[n] - ay[j]) / d2, kind)
            for i in range(ilo, ihi):
                kx = _kern((x[n] - ax[i]) / d1, kind)
                if kx == 0.0:
                    continue
                for j in range(jlo, jhi):
                    o[i, j] += kx * ky[j]
    out /= x.shape[0] * d1 * d2
    return out


cdef inline double _kcdf(double z, int kind) noexcept nogil:
    if kind == 0:
        return 0.5 * erfc(-z / SQRT2)
    if z <= -1.0:
        return 0.0
    if z >= 1.0:
        return 1.0
    return 0.5 + 0.75 * z - 0.25 * z * z * z


cdef inline void _cell_row(double v, const double[::1] e, double d, int kind, double hw,
                           double* buf, Py_ssize_t* first, Py_ssize_t* last) noexcept nogil:
    # masses of cells [e_i, e_{i+1}) touched by the kernel window around v;
    # cells wholly left of the window get 0, wholly right get 0
    cdef Py_ssize_t nc = e.shape[0] - 1
    cdef Py_ssize_t lo = _upper(e, v - hw * d) - 1
    cdef Py_ssize_t hi = _lower(e, v + hw * d)
    cdef Py_ssize_t i
    cdef double prev, cur
    if lo < 0:
        lo = 0
    if hi > nc:
        hi = nc
    first[0] = lo
    last[0] = hi
    if lo >= hi:
        return
    prev = _kcdf((e[lo] - v) / d, kind)
    for i in range(lo, hi):
        cur = _kcdf((e[i + 1] - v) / d, kind)
        buf[i - lo] = cur - prev
        prev = cur


def cell_mass_1d(xs, edges, double delta, int kind):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(edges, dtype=np.float64)
    cdef Py_ssize_t nc = e.shape[0] - 1
    out = np.zeros(nc, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] buf = np.empty(nc, dtype=np.float64)
    cdef double hw = GAUSS_CUTOFF if kind == 0 else 1.0
    cdef Py_ssize_t n, i, lo, hi
    with nogil:
        for n in range(x.shape[0]):
            _cell_row(x[n], e, delta, kind, hw, &buf[0], &lo, &hi)
            for i in range(lo, hi):
                o[i] += buf[i - lo]
    return out


def cell_mass_2d(xs, ys, edges_x, edges_y, double d1, double d2, int kind, chunk=None):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] ex = np.ascontiguousarray(edges_x, dtype=np.float64)
    cdef const double[::1] ey = np.ascontiguousarray(edges_y, dtype=np.float64)
    cdef Py_ssize_t ncx = ex.shape[0] - 1, ncy = ey.shape[0] - 1
    out = np.zeros((ncx, ncy), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] bx = np.empty(ncx, dtype=np.float64)
    cdef double[::1] by = np.empty(ncy, dtype=np.float64)
    cdef double hw = GAUSS_CUTOFF if kind == 0 else 1.0
    cdef Py_ssize_t n, i, j, ilo, ihi, jlo, jhi
    with nogil:
        for n in range(x.shape[0]):
            _cell_row(x[n], ex, d1, kind, hw, &bx[0], &ilo, &ihi)
            if ilo >= ihi:
                continue
            _cell_row(y[n], ey, d2, kind, hw, &by[0], &jlo, &jhi)
            for i in range(ilo, ihi):
                if bx[i - ilo] == 0.0:
                    continue
                for j in range(jlo, jhi):
                    o[i, j] += bx[i - ilo] * by[j - jlo]
    return out

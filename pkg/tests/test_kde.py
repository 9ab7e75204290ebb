import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from transferop import dynamics, kde
from transferop.dynamics import NoiseSpec
from transferop.kde import KernelKind, kde_fit

SQRT2PI = math.sqrt(2.0 * math.pi)

# arcsine density and its second derivative at x = 0.99, by hand
P99 = 3.1991306
P2_99 = 23834.386
DELTA_CLOSED = 0.0010969931907  # (d p / (c^2 p''^2 N))^(1/5), N = 10^6


def kernel_fn(kind):
    return lambda z: kde.kernel_eval(kind, z)


class TestKernels:
    def test_values(self):
        assert kde.kernel_eval("gaussian", 0.0) == pytest.approx(0.398942, abs=1e-6)
        assert kde.kernel_eval("epanechnikov", 1.0) == 0.0
        assert kde.kernel_eval("epanechnikov", -1.0) == 0.0
        assert kde.kernel_eval("epanechnikov", 0.0) == 0.75

    @pytest.mark.parametrize("kind", ["gaussian", "epanechnikov"])
    def test_axioms(self, kind):
        f = kernel_fn(kind)
        lim = (-np.inf, np.inf) if kind == "gaussian" else (-1.0, 1.0)
        mass, _ = integrate.quad(f, *lim, epsabs=1e-13, epsrel=1e-12)
        assert abs(mass - 1.0) < 1e-10
        z = np.linspace(-3, 3, 601)
        np.testing.assert_array_equal(f(z), f(-z))
        assert f(1e6) == 0.0

    @pytest.mark.parametrize("kind", ["gaussian", "epanechnikov"])
    def test_moments_match_quadrature(self, kind):
        f = kernel_fn(kind)
        lim = (-40.0, 40.0) if kind == "gaussian" else (-1.0, 1.0)
        c_num, _ = integrate.quad(lambda z: z * z * f(z), *lim, epsabs=1e-13, epsrel=1e-12)
        d_num, _ = integrate.quad(lambda z: f(z) ** 2, *lim, epsabs=1e-13, epsrel=1e-12)
        c, d = kde.kernel_moments(kind)
        assert abs(c - c_num) < 1e-10 and abs(d - d_num) < 1e-10

    def test_moment_constants(self):
        assert kde.kernel_moments(KernelKind.GAUSSIAN) == pytest.approx((1.0, 1 / (2 * math.sqrt(math.pi))))
        assert kde.kernel_moments("epanechnikov") == pytest.approx((0.2, 0.6))

    def test_unknown_kernel(self):
        with pytest.raises(ValueError):
            kde.as_kernel("boxcar")


class TestFitEval:
    def test_single_sample(self):
        assert kde_fit([0.5], 1.0)(0.5) == pytest.approx(0.398942, abs=1e-6)

    def test_symmetry(self):
        k = kde_fit([0.4, 0.6], 0.05)
        x = np.linspace(0.0, 0.5, 51)
        np.testing.assert_allclose(k(0.5 - x), k(0.5 + x), rtol=1e-13)

    def test_far_tail(self):
        assert kde_fit([0.5], 0.001)(0.5 + 41 * 0.001) <= 1e-300

    def test_brute_force_sum(self, rng):
        x = rng.random(500)
        q = np.linspace(-0.1, 1.1, 37)
        for kind, d in [("gaussian", 0.03), ("epanechnikov", 0.07)]:
            f = kernel_fn(kind)
            brute = f((q[:, None] - x[None, :]) / d).sum(axis=1) / (d * x.size)
            np.testing.assert_allclose(kde_fit(x, d, kind)(q), brute, rtol=1e-12, atol=1e-15)

    def test_2d_brute_force(self, rng):
        pts = rng.random((300, 2))
        q = rng.random((20, 2))
        d1, d2 = 0.05, 0.08
        phi = lambda z: np.exp(-0.5 * z * z) / SQRT2PI
        brute = (phi((q[:, None, 0] - pts[None, :, 0]) / d1) * phi((q[:, None, 1] - pts[None, :, 1]) / d2)).sum(1)
        brute /= 300 * d1 * d2
        k = kde_fit(pts, (d1, d2), dim=2)
        np.testing.assert_allclose(k(q), brute, rtol=1e-12)
        gx, gy = np.linspace(0, 1, 7), np.linspace(0, 1, 5)
        grid = kde.kde_eval_grid(k, gx, gy)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        np.testing.assert_allclose(grid, k(np.column_stack([X.ravel(), Y.ravel()])).reshape(7, 5), rtol=1e-12)

    @pytest.mark.parametrize("delta", [0.0, -0.1, math.nan, math.inf])
    def test_bad_bandwidth(self, delta):
        with pytest.raises(ValueError):
            kde_fit([0.5], delta)

    def test_save(self, tmp_path):
        k = kde_fit([0.2, 0.4], 0.1, "epanechnikov")
        k.save(tmp_path / "k.json", sample_file="s.csv")
        assert '"epanechnikov"' in (tmp_path / "k.json").read_text()


class TestNormalisation:
    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.005, 0.5),
           st.sampled_from(["gaussian", "epanechnikov"]))
    def test_integrates_to_one(self, xs, delta, kind):
        k = kde_fit(xs, delta, kind)
        hw = 40.0 if kind == "gaussian" else 1.0
        lo, hi = min(xs) - hw * delta, max(xs) + hw * delta
        brk = sorted(set(xs))[:50]
        if kind == "epanechnikov":
            brk = sorted({v + s * delta for v in xs for s in (-1.0, 0.0, 1.0)})[:50]
        val, _ = integrate.quad(lambda t: float(k(t)), lo, hi, points=brk, limit=500,
                                epsabs=1e-12, epsrel=1e-12)
        assert abs(val - 1.0) < 1e-8

    def test_nonnegative(self, rng):
        k = kde_fit(rng.random(100), 0.01)
        assert (k(np.linspace(-1, 2, 1001)) >= 0).all()


class TestBounds:
    def test_bias_bound(self):
        assert kde.kde_bias_bound(0.0011, 2.383e4, 1.0) == pytest.approx(0.01442, abs=5e-5)
        assert kde.kde_bias_bound(0.1, 0.0, 1.0) == 0.0
        assert kde.kde_bias_bound(0.05, 10.0, 1.0) == pytest.approx(kde.kde_bias_bound(0.1, 10.0, 1.0) / 4)

    def test_optimal_delta_closed_form(self):
        opt = kde.kde_optimal_delta(10 ** 6, P99, P2_99)
        assert opt.delta == pytest.approx(DELTA_CLOSED, rel=1e-6)
        c, d = kde.kernel_moments("gaussian")
        closed = (d * P99 / (c ** 2 * P2_99 ** 2 * 10 ** 6)) ** 0.2
        assert opt.delta == pytest.approx(closed, rel=1e-12)

    def test_brute_force_argmin(self):
        d = np.geomspace(1e-5, 1e-1, 200001)
        ub = kde.kde_mse_upper_bound(d, 10 ** 6, P99, P2_99)
        assert d[np.argmin(ub)] == pytest.approx(DELTA_CLOSED, rel=1e-4)
        assert abs(DELTA_CLOSED / 0.0011 - 1) < 0.1

    def test_rate_constant(self):
        vals = [kde.kde_optimal_delta(n, P99, P2_99).delta * n ** 0.2 for n in (10 ** 4, 10 ** 5, 10 ** 6)]
        assert max(vals) - min(vals) < 1e-9 * vals[0]

    def test_ub_scaling(self):
        ub = [kde.kde_mse_upper_bound(kde.kde_optimal_delta(n, P99, P2_99).delta, n, P99, P2_99)
              for n in (10 ** 5, 10 ** 6)]
        assert ub[1] / ub[0] == pytest.approx(10 ** -0.8, rel=0.05)

    def test_ub_shape(self):
        d = np.geomspace(1e-5, 1e-1, 21)
        ub = kde.kde_mse_upper_bound(d, 10 ** 6, P99, P2_99)
        i = int(np.argmin(ub))
        assert 0 < i < 20
        assert (np.diff(ub[:i + 1]) < 0).all() and (np.diff(ub[i:]) > 0).all()
        assert (np.diff(np.log(ub), 2) > 0).all()
        assert kde.kde_mse_upper_bound(1e3, 10 ** 6, P99, P2_99) > 1e6

    def test_flat_density_has_no_optimum(self):
        with pytest.raises(ValueError):
            kde.kde_optimal_delta(10 ** 6, 1.0, 0.0)

    def test_2d_rate(self):
        opt = kde.kde_optimal_delta(10 ** 6, P99, P2_99, dim=2)
        assert opt.exponent == pytest.approx(-1 / 6)
        one = kde.kde_optimal_delta(10 ** 6, P99, P2_99).delta
        assert opt.delta == pytest.approx(one * 10 ** 0.2, rel=1e-12)
        assert opt.constant == pytest.approx(one * 10 ** 1.2, rel=1e-12)


class TestBiasVarianceValidation:
    """Replicated fits on a truncated normal (mu = 0.5, sigma = 0.15) at x = 0.5."""

    SEED = 20261015
    N = 10_000
    REPS = 200
    ns = NoiseSpec(0.15)

    @pytest.fixture(scope="class")
    @classmethod
    def replicates(cls):
        out = {}
        for delta in (0.02, 0.05):
            rng = dynamics.make_rng(cls.SEED)
            vals = np.empty(cls.REPS)
            for r in range(cls.REPS):
                x = dynamics.sample_truncated_normal(np.full(cls.N, 0.5), cls.ns, rng)
                vals[r] = kde_fit(x, delta)(np.array([0.5]))[0]
            out[delta] = vals
        return out

    def p(self):
        return dynamics.truncated_normal_pdf(0.5, 0.5, self.ns)

    @pytest.mark.parametrize("delta", [0.02, 0.05])
    def test_bias(self, replicates, delta):
        p = self.p()
        predicted = kde.kde_bias_bound(delta, -p / 0.15 ** 2, 1.0)
        assert abs((replicates[delta].mean() - p) / predicted - 1.0) < 0.25

    @pytest.mark.xfail(strict=True, reason="leading-order variance omits -p^2/N, which is 19% (delta=0.02) "
                                           "and 47% (delta=0.05) of d p/(delta N) here")
    @pytest.mark.parametrize("delta", [0.02, 0.05])
    def test_variance_leading_order(self, replicates, delta):
        predicted = kde.kernel_moments("gaussian")[1] * self.p() / (delta * self.N)
        assert abs(replicates[delta].var(ddof=1) / predicted - 1.0) < 0.25

    @pytest.mark.parametrize("delta", [0.02, 0.05])
    def test_variance_exact(self, replicates, delta):
        pdf = lambda y: dynamics.truncated_normal_pdf(y, 0.5, self.ns)
        kd = lambda y: math.exp(-0.5 * ((0.5 - y) / delta) ** 2) / (SQRT2PI * delta)
        m1, _ = integrate.quad(lambda y: kd(y) * pdf(y), 0, 1, points=[0.5], epsabs=1e-13)
        m2, _ = integrate.quad(lambda y: kd(y) ** 2 * pdf(y), 0, 1, points=[0.5], epsabs=1e-13)
        predicted = (m2 - m1 ** 2) / self.N
        assert abs(replicates[delta].var(ddof=1) / predicted - 1.0) < 0.25

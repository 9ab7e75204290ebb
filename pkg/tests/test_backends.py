import os
import subprocess
import sys

import numpy as np
import pytest

from transferop import _backend, _pykernels

HAVE_C = "cython" in _backend.available()
needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")


@pytest.fixture(scope="module")
def ck():
    return _backend.load("cython")


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(7)
    xs = np.sort(rng.random(3000))
    ys = rng.random(3000)
    return xs, ys


class TestSelection:
    def test_available_lists_python(self):
        assert "python" in _backend.available()

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            _backend.load("fortran")

    def test_env_forces_python(self):
        env = dict(os.environ, TRANSFEROP_BACKEND="python")
        out = subprocess.run([sys.executable, "-c", "import transferop; print(transferop.BACKEND)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    @needs_c
    def test_default_is_compiled(self):
        env = {k: v for k, v in os.environ.items() if k != "TRANSFEROP_BACKEND"}
        out = subprocess.run([sys.executable, "-c", "import transferop; print(transferop.BACKEND)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "cython"


@needs_c
class TestParity:
    def test_orbit_bit_identical(self, ck):
        u = np.random.default_rng(1).random(20000)
        for sigma in (0.0, 0.02):
            a = ck.logistic_orbit(0.3141592653, 4.0, 20000, sigma, u)
            b = _pykernels.logistic_orbit(0.3141592653, 4.0, 20000, sigma, u)
            assert a.tobytes() == b.tobytes()

    def test_evolve_bit_identical(self, ck):
        x = np.random.default_rng(2).random(5000)
        assert ck.logistic_evolve(x, 3.9, 50).tobytes() == _pykernels.logistic_evolve(x, 3.9, 50).tobytes()

    def test_truncated_normal(self, ck):
        rng = np.random.default_rng(3)
        mu, u = rng.random(5000) * 1.4 - 0.2, rng.random(5000)
        for sigma in (1e-3, 0.02, 0.3, 5.0):
            np.testing.assert_allclose(ck.tn_sample(mu, sigma, 0.0, 1.0, u),
                                       _pykernels.tn_sample(mu, sigma, 0.0, 1.0, u), rtol=0, atol=1e-14)
        assert np.isnan(ck.tn_draw(80.0, 0.01, 0.0, 1.0, 0.5))
        assert np.isnan(_pykernels.tn_draw(80.0, 0.01, 0.0, 1.0, 0.5))

    @pytest.mark.parametrize("kind,delta", [(0, 0.01), (0, 0.3), (1, 0.02), (1, 0.5)])
    def test_kde_1d(self, ck, data, kind, delta):
        xs, _ = data
        q = np.linspace(-0.2, 1.2, 301)
        np.testing.assert_allclose(ck.kde1d_eval(xs, q, delta, kind), _pykernels.kde1d_eval(xs, q, delta, kind),
                                   rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("kind", [0, 1])
    def test_kde_2d(self, ck, data, kind):
        xs, ys = data
        qx, qy = np.linspace(0, 1, 50), np.linspace(1, 0, 50)
        np.testing.assert_allclose(ck.kde2d_eval(xs, ys, qx, qy, 0.05, 0.08, kind),
                                   _pykernels.kde2d_eval(xs, ys, qx, qy, 0.05, 0.08, kind), rtol=1e-12, atol=1e-14)
        g = np.linspace(0, 1, 21)
        np.testing.assert_allclose(ck.kde2d_grid(xs, ys, g, g, 0.05, 0.08, kind),
                                   _pykernels.kde2d_grid(xs, ys, g, g, 0.05, 0.08, kind), rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("kind", [0, 1])
    @pytest.mark.parametrize("open_edges", [False, True])
    def test_cell_mass(self, ck, data, kind, open_edges):
        xs, ys = data
        e = np.linspace(0, 1, 31)
        if open_edges:
            e[0], e[-1] = -np.inf, np.inf
        np.testing.assert_allclose(ck.cell_mass_1d(xs, e, 0.02, kind), _pykernels.cell_mass_1d(xs, e, 0.02, kind),
                                   rtol=1e-11, atol=1e-11)
        np.testing.assert_allclose(ck.cell_mass_2d(xs, ys, e, e, 0.02, 0.04, kind),
                                   _pykernels.cell_mass_2d(xs, ys, e, e, 0.02, 0.04, kind), rtol=1e-11, atol=1e-11)
        if open_edges:
            assert ck.cell_mass_1d(xs, e, 0.02, kind).sum() == pytest.approx(xs.size, rel=1e-12)

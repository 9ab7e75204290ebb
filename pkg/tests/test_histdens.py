import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from transferop import histdens
from transferop.dynamics import MapSpec, generate_evolved_ensemble
from transferop.errors import DomainError
from transferop.histdens import HistDensity, bin_index, hist_fit

# arcsine constants at x = 0.99, computed by hand from the closed forms
C1 = 158.34104
P99 = 3.1991306

unit_samples = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=300)


class TestBinIndex:
    @pytest.mark.parametrize("x,K,expected", [(0.0, 10, 1), (1.0, 10, 10), (0.25, 4, 2),
                                              (0.999999, 10, 10), (0.1, 10, 2), (0.5, 1, 1)])
    def test_examples(self, x, K, expected):
        assert bin_index(x, K) == expected

    def test_vectorised(self):
        np.testing.assert_array_equal(bin_index(np.array([0.0, 0.5, 1.0]), 2), [1, 2, 2])

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            bin_index(1.01, 4)


class TestFit:
    def test_hand_count(self):
        h = hist_fit([0.1, 0.3, 0.6, 0.9], 2)
        np.testing.assert_array_equal(h.counts, [2, 2])
        np.testing.assert_array_equal(h.densities, [1.0, 1.0])
        assert h(0.7) == 1.0

    def test_single_sample(self):
        h = hist_fit([0.42], 1)
        np.testing.assert_array_equal(h(np.linspace(0, 1, 7)), np.ones(7))

    def test_empty_bin_is_zero(self):
        h = hist_fit([0.1, 0.2], 4)
        assert h(0.9) == 0.0

    def test_endpoint_bins_largest(self):
        x = generate_evolved_ensemble(MapSpec.logistic(), 1_000_000, seed=0).x
        c = hist_fit(x, 40).counts
        assert c[0] > c[1:-1].max() and c[-1] > c[1:-1].max()

    def test_rejects_out_of_domain(self):
        with pytest.raises(DomainError) as exc:
            hist_fit([0.2, 1.3, 0.5, np.nan], 3)
        assert exc.value.indices == [1, 3]

    def test_2d(self):
        h = hist_fit([[0.1, 0.9], [0.2, 0.8], [0.7, 0.1]], 2, dim=2)
        np.testing.assert_array_equal(h.counts, [[0, 2], [1, 0]])
        assert h([0.1, 0.9]) == pytest.approx(2 * 4 / 3)
        assert (h.densities.sum() / 4) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("K", [0, -3])
    def test_bad_K(self, K):
        with pytest.raises(ValueError):
            hist_fit([0.5], K)

    def test_counts_must_sum_to_N(self):
        with pytest.raises(ValueError):
            HistDensity(2, 1, np.array([1, 1]), 3)


class TestProperties:
    @given(unit_samples, st.integers(1, 64))
    def test_mass_conservation(self, xs, K):
        h = hist_fit(xs, K)
        assert int(h.counts.sum()) == len(xs)
        assert h.densities.sum() / K == pytest.approx(1.0, rel=1e-14)

    @given(unit_samples, st.integers(1, 32), st.sampled_from([2, 4, 8]))
    def test_refinement_consistency(self, xs, K, m):
        fine = hist_fit(xs, m * K).counts
        np.testing.assert_array_equal(fine.reshape(K, m).sum(axis=1), hist_fit(xs, K).counts)

    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=100), st.integers(1, 12))
    def test_2d_marginal_matches_1d(self, pts, K):
        pts = np.array(pts)
        joint = hist_fit(pts, K, dim=2).counts
        np.testing.assert_array_equal(joint.sum(axis=1), hist_fit(pts[:, 0], K).counts)


class TestBounds:
    def test_bias_bound(self):
        assert histdens.hist_bias_bound(2503, 158.3) == pytest.approx(0.06324, abs=1e-5)
        assert histdens.hist_bias_bound(100, 0.0) == 0.0
        assert histdens.hist_bias_bound(200, 3.0) == pytest.approx(histdens.hist_bias_bound(100, 3.0) / 2)

    def test_ub_bias_vanishes(self):
        big = histdens.hist_mse_upper_bound(10 ** 9, 10 ** 30, C1, P99)
        assert big < 1e-12

    def test_argmin_brute_force(self):
        K = np.arange(1, 20001)
        ub = histdens.hist_mse_upper_bound(K, 10 ** 6, C1, P99)
        k_star = int(K[np.argmin(ub)])
        assert k_star == 2503
        assert histdens.hist_optimal_K(10 ** 6, C1, P99) == (1986, 2503)
        assert histdens.hist_mse_upper_bound(1, 10 ** 6, C1, P99) >= ub.min()

    def test_cube_root_scaling(self):
        a = histdens.hist_optimal_K(10 ** 5, C1, P99)[1]
        b = histdens.hist_optimal_K(8 * 10 ** 5, C1, P99)[1]
        assert b / a == pytest.approx(2.0, abs=0.01)

    def test_no_bias_penalty(self):
        assert histdens.hist_optimal_K(10 ** 6, 0.0, P99)[1] == 1


class TestSerialisation:
    def test_round_trip(self, tmp_path):
        h = hist_fit(np.linspace(0, 1, 101), 7)
        h.save(tmp_path / "h.json", tmp_path / "h.csv")
        g = HistDensity.load(tmp_path / "h.json")
        np.testing.assert_array_equal(g.counts, h.counts)
        rows = np.loadtxt(tmp_path / "h.csv", delimiter=",", skiprows=1)
        np.testing.assert_allclose(rows[:, 1], h.densities, rtol=0, atol=0)
        assert json.loads((tmp_path / "h.json").read_text())["K"] == 7

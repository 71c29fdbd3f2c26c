"""Statistical and structural checks for the fBm generators.

Monte Carlo assertions use fixed seeds and 3-standard-error bands (or a KS
test at level 0.01), so they are deterministic once the seed is pinned.
"""

import numpy as np
import pytest
from scipy import stats

from fbmlab import (
    CovarianceSpec,
    ParameterError,
    fbm_covariance,
    generate_fbm_hilbert,
    generate_fbm_scalar,
    holder_seminorm,
    wiener_shift,
)
from conftest import make_grid


class TestCovarianceFunction:
    def test_diagonal_collapses(self):
        for H in (0.55, 0.75, 0.9):
            assert fbm_covariance(1.0, 1.0, H) == pytest.approx(1.0)

    def test_brownian_case_is_min(self):
        assert fbm_covariance(1.0, 2.0, 0.5) == pytest.approx(1.0)

    def test_direct_evaluation(self):
        # 0.5 * (1 + 2^1.5 - 1) = sqrt(2)
        assert fbm_covariance(1.0, 2.0, 0.75) == pytest.approx(np.sqrt(2.0), rel=1e-14)

    def test_two_sided_arguments(self):
        assert fbm_covariance(-1.0, 1.0, 0.75) == pytest.approx(
            0.5 * (1 + 1 - 2**1.5)
        )

    @pytest.mark.parametrize("H", [0.0, 1.0, -0.3, 1.7])
    def test_hurst_range_enforced(self, H):
        with pytest.raises(ParameterError):
            fbm_covariance(1.0, 2.0, H)


class TestScalarGeneration:
    def test_zero_at_origin(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        p = generate_fbm_scalar(g, 0.75, seed=0)
        assert p.values[0] == 0.0

    def test_two_sided_zero_at_time_zero(self):
        g = make_grid(-0.5, 1 / 64, 1.0)
        p = generate_fbm_scalar(g, 0.75, seed=0)
        assert p.values[g.index_of(0.0)] == 0.0

    def test_deterministic_given_seed(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        a = generate_fbm_scalar(g, 0.75, seed=42)
        b = generate_fbm_scalar(g, 0.75, seed=42)
        c = generate_fbm_scalar(g, 0.75, seed=43)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_terminal_variance(self):
        # Var B^H(1) = 1 within 3 standard errors over 10^4 seeds
        g = make_grid(0.0, 1 / 64, 1.0)
        vals = np.array(
            [generate_fbm_scalar(g, 0.75, seed=s).values[-1] for s in range(10_000)]
        )
        sq = vals**2
        se = sq.std(ddof=1) / np.sqrt(sq.size)
        assert abs(sq.mean() - 1.0) <= 3 * se

    def test_brownian_disjoint_increments_uncorrelated(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        incr = []
        for s in range(10_000):
            v = generate_fbm_scalar(g, 0.5, seed=s).values
            incr.append((v[16] - v[0], v[48] - v[32]))
        incr = np.asarray(incr)
        prod = incr[:, 0] * incr[:, 1]
        se = prod.std(ddof=1) / np.sqrt(prod.size)
        assert abs(prod.mean()) <= 3 * se

    def test_covariance_at_pairs(self):
        # smaller-scale version of the acceptance gate, with negative times
        g = make_grid(-1.0, 1 / 32, 1.0)
        pairs = [(-0.5, 0.5), (0.25, 0.75), (-1.0, -0.5), (0.5, 1.0)]
        vals = np.empty((4000, len(pairs)))
        for s in range(4000):
            p = generate_fbm_scalar(g, 0.75, seed=s)
            for i, (a, b) in enumerate(pairs):
                vals[s, i] = p.values[g.index_of(a)] * p.values[g.index_of(b)]
        for i, (a, b) in enumerate(pairs):
            theo = fbm_covariance(a, b, 0.75)
            se = vals[:, i].std(ddof=1) / np.sqrt(vals.shape[0])
            assert abs(vals[:, i].mean() - theo) <= 3 * se, (a, b)

    def test_self_similarity_ks(self):
        # B(4)/4^H and B(1) agree in distribution (independent ensembles)
        g = make_grid(0.0, 1 / 32, 4.0)
        H = 0.75
        a = np.array(
            [generate_fbm_scalar(g, H, seed=s).values[g.index_of(4.0)]
             for s in range(10_000)]
        ) / 4.0**H
        b = np.array(
            [generate_fbm_scalar(g, H, seed=20_000 + s).values[g.index_of(1.0)]
             for s in range(10_000)]
        )
        assert stats.ks_2samp(a, b).pvalue > 0.01


class TestHilbertGeneration:
    def test_zero_covariance_gives_zero_path(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        Q = CovarianceSpec((0.0, 0.0, 0.0))
        p = generate_fbm_hilbert(g, 0.75, Q, seed=1)
        assert np.all(p.values == 0.0)

    def test_single_mode_matches_scalar_distribution(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        Q = CovarianceSpec((1.0,))
        vals = np.array(
            [generate_fbm_hilbert(g, 0.75, Q, seed=s).values[-1, 0]
             for s in range(10_000)]
        )
        sq = vals**2
        se = sq.std(ddof=1) / np.sqrt(sq.size)
        assert abs(sq.mean() - 1.0) <= 3 * se

    def test_trace_sets_total_variance(self):
        # E ||B^H(1)||^2 = tr(Q)
        g = make_grid(0.0, 1 / 64, 1.0)
        Q = CovarianceSpec.from_trace(0.5, 4)
        sq = np.array(
            [np.sum(generate_fbm_hilbert(g, 0.75, Q, seed=s).values[-1] ** 2)
             for s in range(10_000)]
        )
        se = sq.std(ddof=1) / np.sqrt(sq.size)
        assert abs(sq.mean() - 0.5) <= 3 * se

    def test_modes_reproducible_independently_of_dimension(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        small = generate_fbm_hilbert(g, 0.75, CovarianceSpec((0.3, 0.2)), seed=5)
        large = generate_fbm_hilbert(g, 0.75, CovarianceSpec((0.3, 0.2, 0.1)), seed=5)
        assert np.array_equal(small.values, large.values[:, :2])

    def test_paired_scaling_in_trace(self):
        g = make_grid(0.0, 1 / 64, 1.0)
        a = generate_fbm_hilbert(g, 0.75, CovarianceSpec.from_trace(0.04, 3), seed=9)
        b = generate_fbm_hilbert(g, 0.75, CovarianceSpec.from_trace(0.16, 3), seed=9)
        assert np.allclose(2.0 * a.values, b.values, rtol=1e-12, atol=0)


def test_shift_preserves_window_seminorms():
    g = make_grid(0.0, 1 / 64, 2.0)
    om = generate_fbm_hilbert(g, 0.75, CovarianceSpec.from_trace(1.0, 2), seed=11)
    shifted = wiener_shift(om, 0.5)
    a = holder_seminorm(shifted, 0.62, 0.0, 1.0)
    b = holder_seminorm(om, 0.62, 0.5, 1.5)
    assert a == pytest.approx(b, rel=1e-12)

import math

import numpy as np
import pytest

from fbmlab import (
    DomainError,
    ParameterError,
    SemigroupConstants,
    SpectralOperator,
    apply_frac_power,
    apply_semigroup,
    dirichlet_laplacian_1d,
    estimate_cS,
)
from fbmlab.holder import damped_holder_norm
from fbmlab.paths import TimeGrid
from fbmlab.semigroup import (
    check_holder_semigroup_estimates,
    measure_damped_semigroup_constant,
    semigroup_path,
)


class TestSpectralOperator:
    def test_dirichlet_eigenvalues(self):
        op = dirichlet_laplacian_1d(3)
        assert op.eigenvalues[0] == pytest.approx(math.pi**2)
        assert op.eigenvalues[2] == pytest.approx(9 * math.pi**2)

    def test_invariants(self):
        with pytest.raises(ParameterError):
            SpectralOperator((2.0, 1.0), 0.5)   # not nondecreasing
        with pytest.raises(ParameterError):
            SpectralOperator((1.0, 2.0), 1.5)   # lam >= lambda_1
        with pytest.raises(ParameterError):
            SpectralOperator((-1.0, 2.0), 0.5)
        with pytest.raises(ParameterError):
            SemigroupConstants(-1.0, 0.5)


class TestSemigroupAction:
    def test_time_zero_is_identity(self, operator):
        x = np.arange(1.0, 9.0)
        assert np.array_equal(apply_semigroup(operator, 0.0, x), x)

    def test_single_mode_exponential(self, operator):
        x = np.eye(8)[0]
        val = apply_semigroup(operator, 0.1, x)[0]
        assert val == pytest.approx(math.exp(-math.pi**2 * 0.1), rel=1e-14)

    def test_flow_property(self, operator):
        x = np.linspace(-1, 1, 8)
        a = apply_semigroup(operator, 0.2, apply_semigroup(operator, 0.3, x))
        b = apply_semigroup(operator, 0.5, x)
        assert np.allclose(a, b, rtol=1e-14)

    def test_negative_time_rejected(self, operator):
        with pytest.raises(DomainError):
            apply_semigroup(operator, -0.1, np.ones(8))

    def test_contraction_rate(self, operator):
        x = np.random.default_rng(0).normal(size=8)
        for t in (0.05, 0.3, 1.0):
            lhs = np.linalg.norm(apply_semigroup(operator, t, x))
            assert lhs <= math.exp(-operator.eigenvalues[0] * t) * np.linalg.norm(x) * (1 + 1e-14)


class TestFracPower:
    def test_zero_power_identity(self, operator):
        x = np.ones(8)
        assert np.array_equal(apply_frac_power(operator, 0.0, x), x)

    def test_first_power_scales_by_eigenvalue(self, operator):
        e1 = np.eye(8)[0]
        assert apply_frac_power(operator, 1.0, e1)[0] == pytest.approx(math.pi**2)

    def test_power_additivity(self, operator):
        x = np.linspace(1, 2, 8)
        twice = apply_frac_power(operator, 0.5, apply_frac_power(operator, 0.5, x))
        assert np.allclose(twice, apply_frac_power(operator, 1.0, x), rtol=1e-14)

    def test_space_ordering(self, operator):
        # ||x||_{V_zeta} <= lambda_1^(zeta-gamma) ||x||_{V_gamma} for gamma >= zeta
        x = np.random.default_rng(1).normal(size=8)
        zeta, gamma = 0.3, 0.8
        lhs = np.linalg.norm(apply_frac_power(operator, zeta, x))
        rhs = operator.eigenvalues[0] ** (zeta - gamma) * np.linalg.norm(
            apply_frac_power(operator, gamma, x)
        )
        assert lhs <= rhs * (1 + 1e-14)


class TestEstimateCS:
    def test_equal_exponents_give_one(self, operator):
        assert estimate_cS(operator, 0.7, 0.7, 5.0) == pytest.approx(1.0, abs=1e-6)

    def test_single_mode_calculus_maximum(self):
        # gamma - zeta = 1, lam = lambda_1 / 2: sup_t t lam_1 e^(-lam_1 t / 2) = 2/e
        op = SpectralOperator((4.0,), 2.0)
        assert estimate_cS(op, 1.0, 0.0, 10.0) == pytest.approx(2 / math.e, rel=1e-5)

    def test_monotone_in_decay_rate(self):
        vals = []
        for lam in (3.0, 2.0, 1.0, 0.5):
            op = SpectralOperator((4.0, 16.0), lam)
            vals.append(estimate_cS(op, 0.6, 0.1, 10.0))
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_exponent_order_enforced(self, operator):
        with pytest.raises(DomainError):
            estimate_cS(operator, 0.1, 0.5, 1.0)


class TestHolderEstimates:
    def test_report_finite_and_stable(self, operator):
        kw = dict(sigma=0.6, eta=0.1, gamma=0.7, delta=0.4, eta_dd=0.3, gamma_dd=0.3)
        r1 = check_holder_semigroup_estimates(operator, n_samples=2000, **kw)
        r2 = check_holder_semigroup_estimates(operator, n_samples=8000, **kw)
        for a, b in ((r1.identity_gap_constant, r2.identity_gap_constant),
                     (r1.difference_constant, r2.difference_constant),
                     (r1.double_difference_constant, r2.double_difference_constant)):
            assert np.isfinite(a) and np.isfinite(b)
            assert b <= a * 1.5 + 1e-9 or a <= b * 1.5  # stable under refinement

    def test_identity_gap_lower_bound(self, operator):
        # sigma = eta: the measured constant dominates sup_i |e^(-lam_i t) - 1| < 1
        rep = check_holder_semigroup_estimates(
            operator, sigma=0.5, eta=0.5, gamma=0.5, delta=0.5,
            eta_dd=0.2, gamma_dd=0.2, n_samples=2000,
        )
        t = 0.7
        probe = max(abs(math.exp(-lam * t) - 1.0) for lam in operator.eigenvalues)
        assert rep.identity_gap_constant >= probe

    def test_degenerate_tuples_vanish(self, operator):
        # t = 0 and r = q rows contribute zero to the left-hand sides
        lam = np.asarray(operator.eigenvalues)
        assert np.all(np.abs(np.exp(-lam * 0.0) - 1.0) == 0.0)
        assert np.all(
            np.abs(np.exp(-lam * (0.9 - 0.3)) - np.exp(-lam * (0.9 - 0.3))) == 0.0
        )

    def test_exponent_ranges_enforced(self, operator):
        with pytest.raises(DomainError):
            check_holder_semigroup_estimates(
                operator, sigma=1.8, eta=0.1, gamma=0.7, delta=0.4,
                eta_dd=0.3, gamma_dd=0.3,
            )


class TestDampedSemigroupBound:
    def test_windowed_bound_with_measured_constant(self):
        """||S(.)v||_{beta,beta,t1,t2} <= estimate_cS(beta, 0) e^(-lam t1) ||v||
        over random windows and unit vectors, with 5% grid slack. The decay
        rate sits close to lambda_1 so that the smoothing constant is the
        binding one."""
        lam1 = math.pi**2
        op = dirichlet_laplacian_1d(8, lam=0.92 * lam1)
        beta = 0.55
        rng = np.random.default_rng(3)
        c_est = estimate_cS(op, beta, 0.0, 2.0)
        for _ in range(100):
            t2 = rng.uniform(0.5, 2.0)
            t1 = rng.uniform(1e-3, t2 - 0.1)
            grid = TimeGrid(t1, (t2 - t1) / 256, 257)
            v = rng.normal(size=8)
            v /= np.linalg.norm(v)
            path = semigroup_path(op, v, grid)
            lhs = damped_holder_norm(path, beta, t1, t2)
            rhs = c_est * math.exp(-op.lam * t1) * 1.05
            assert lhs <= rhs

    def test_measured_damped_constant_is_modest(self, operator):
        c = measure_damped_semigroup_constant(operator, 0.55, seed=0)
        assert 0.5 <= c <= 2.0

import math

import numpy as np
from django.test import SimpleTestCase

from gwlab.exceptions import DomainError, InsufficientDepth
from montecarlo.rng import RngStream
from offspring.distribution import OffspringDist
from recursion.experiments import beta_trace, expected_phi, mean_escape, pool_layout
from recursion.pool import SubtreePool, beta_limit, limit_pool, limit_schedule
from recursion.solver import phi_profile, solve
from trees.samplers import sample_gw


class SolverTest(SimpleTestCase):
    """Test the explicit β/γ recursion on a binary tree"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.alpha = 0.5
        self.lam = self.binary.bias_rate(self.alpha)
        self.beta1 = 2.0 / (self.lam + 2.0)

    def test_one_level(self):
        """Test β_1 = 2/(λ+2) and γ_1 = 1/(λ+2)"""
        tree = sample_gw(self.binary, 1, RngStream(1, 0).source())
        table = solve(tree, 1, self.lam)
        self.assertAlmostEqual(table.beta_root, self.beta1)
        self.assertAlmostEqual(table.gamma_root, 1.0 / (self.lam + 2.0))

    def test_two_levels(self):
        """Test β_2 iterates the one-level map"""
        tree = sample_gw(self.binary, 2, RngStream(1, 0).source())
        s = 2.0 * self.beta1
        self.assertAlmostEqual(solve(tree, 2, self.lam).beta_root, s / (self.lam + s))

    def test_boundary_at_root(self):
        """Test n = 0 puts the root on the boundary"""
        tree = sample_gw(self.binary, 0, RngStream(1, 0).source())
        table = solve(tree, 0, self.lam)
        self.assertEqual(table.beta_root, 1.0)
        self.assertEqual(table.gamma_root, 0.0)

    def test_unexpanded_tree(self):
        """Test solving past the sampled depth raises InsufficientDepth"""
        tree = sample_gw(self.binary, 1, RngStream(1, 0).source())
        with self.assertRaises(InsufficientDepth):
            solve(tree, 3, self.lam)

    def test_monotone_in_depth(self):
        """Test β_n decreases and γ_n increases with n on a random tree"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        tree = sample_gw(mixed, 7, RngStream(2, 0).source())
        lam = mixed.bias_rate(0.3)
        tables = [solve(tree, n, lam) for n in range(1, 8)]
        betas = np.array([table.beta_root for table in tables])
        gammas = np.array([table.gamma_root for table in tables])
        self.assertTrue(np.all(np.diff(betas) < 0.0))
        self.assertTrue(np.all(np.diff(gammas) > 0.0))
        pool = SubtreePool(mixed, 0.3, range(1, 9), 64, RngStream(3, 0).generator())
        columns = np.stack([pool.beta_at(n) for n in range(1, 9)], axis=1)
        self.assertTrue(np.all(np.diff(columns, axis=1) <= 0.0))

    def test_b_value(self):
        """Test B = β/(1-β)"""
        tree = sample_gw(self.binary, 1, RngStream(1, 0).source())
        table = solve(tree, 1, self.lam)
        self.assertAlmostEqual(table.b_value(tree.root), 2.0 / self.lam)


class PhiProfileTest(SimpleTestCase):
    """Test Φ_n(r) on explicit trees"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.lam = self.binary.bias_rate(0.5)
        self.beta1 = 2.0 / (self.lam + 2.0)

    def test_phi_two(self):
        """Test Φ_2(1) = 2/(λ+2)"""
        tree = sample_gw(self.binary, 2, RngStream(1, 0).source())
        profile = phi_profile(tree, 2, self.lam)
        self.assertAlmostEqual(profile.phi[1], self.beta1)

    def test_phi_three(self):
        """Test Φ_3 on the binary tree"""
        tree = sample_gw(self.binary, 3, RngStream(1, 0).source())
        profile = phi_profile(tree, 3, self.lam)
        denominator = self.lam + 2.0 * self.beta1
        self.assertAlmostEqual(profile.phi[1], 2.0 / denominator)
        self.assertAlmostEqual(profile.phi[2], 2.0 * self.beta1 / denominator)

    def test_phi_sums_to_gamma(self):
        """Test Σ_r Φ_n(r) equals Γ_n(o) on a random tree"""
        mixed = OffspringDist.parse('1:0.3,2:0.4,3:0.3')
        tree = sample_gw(mixed, 5, RngStream(2, 0).source())
        profile = phi_profile(tree, 5, mixed.bias_rate(0.3))
        self.assertAlmostEqual(profile.total, profile.gamma_o, places=10)


class PoolTest(SimpleTestCase):
    """Test the virtual subtree pool"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})

    def test_pool_matches_explicit_recursion(self):
        """Test pool β on a binary law equals the explicit value"""
        lam = self.binary.bias_rate(1.0)
        pool = SubtreePool(self.binary, 1.0, [1, 2], 8, np.random.default_rng(0))
        np.testing.assert_allclose(pool.beta_at(1), 2.0 / (lam + 2.0))
        np.testing.assert_allclose(pool.w_at(2), 1.0)

    def test_phi_needs_tracking(self):
        """Test Φ columns are only available when tracked"""
        pool = SubtreePool(self.binary, 1.0, [3], 4, np.random.default_rng(0))
        with self.assertRaises(ValueError):
            pool.phi_at(3)

    def test_limit_is_fixed_point(self):
        """Test the binary limit β = 1 - e^{-α}"""
        pool, report = limit_pool(self.binary, 1.0, 8, np.random.default_rng(0), tol=1e-9)
        self.assertTrue(report.converged.all())
        np.testing.assert_allclose(report.values, 1.0 - math.exp(-1.0), atol=1e-7)
        self.assertAlmostEqual(beta_limit(pool, 0, tol=1e-9), 1.0 - math.exp(-1.0), places=7)

    def test_limit_needs_positive_alpha(self):
        """Test α ≤ 0 raises DomainError"""
        with self.assertRaises(DomainError):
            limit_pool(self.binary, 0.0, 8, np.random.default_rng(0))

    def test_limit_schedule(self):
        """Test cuts double up to the cap"""
        self.assertEqual(limit_schedule(16, 100), [16, 32, 64])


class RecursionExperimentTest(SimpleTestCase):
    """Test pooled recursion experiments"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})

    def test_pool_layout(self):
        """Test pool counts and sizes"""
        self.assertEqual(pool_layout(10000), (32, 313))
        self.assertEqual(pool_layout(100000), (49, 2048))
        self.assertEqual(pool_layout(100), (4, 64))
        self.assertEqual(pool_layout(100, pool_size=32), (4, 32))

    def test_mean_escape_binary(self):
        """Test E[β(o)] = 1 - e^{-α} on the binary tree"""
        result = mean_escape(self.binary, 1.0, samples=64)
        self.assertAlmostEqual(result.mean, 1.0 - math.exp(-1.0), places=5)

    def test_expected_phi_checks(self):
        """Test the pointwise bound and the Γ identity hold on every element"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        result = expected_phi(mixed, 0.5, 4, samples=128)
        self.assertTrue(result.bound_ok)
        self.assertLess(result.identity_gap, 1e-9)
        self.assertEqual(sorted(result.phi), [1, 2, 3])

    def test_expected_phi_binary(self):
        """Test E[Φ_2(1)] = 2/(λ+2) on the binary tree"""
        lam = self.binary.bias_rate(0.5)
        result = expected_phi(self.binary, 0.5, 2, samples=64)
        self.assertAlmostEqual(result.phi[1].mean, 2.0 / (lam + 2.0))

    def test_expected_phi_needs_two_levels(self):
        """Test n < 2 is rejected"""
        with self.assertRaises(ValueError):
            expected_phi(self.binary, 0.5, 1)

    def test_beta_trace(self):
        """Test the trace lists one row per cut"""
        rows = beta_trace(self.binary, 1.0, [1, 2], size=4)
        self.assertEqual([row[0] for row in rows], [1, 2])
        self.assertAlmostEqual(rows[0][1], 1.0 / (math.exp(-1.0) + 1.0))

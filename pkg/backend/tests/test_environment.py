import math

from django.conf import settings
from django.test import SimpleTestCase

from gwlab.exceptions import DomainError, NotAdjacent
from montecarlo.accumulators import estimate
from montecarlo.rng import RngStream
from offspring.distribution import OffspringDist
from environment.checks import (
    ancestor_moments, gw_singular_psi_check, mu_infinity_velocity, psi_trend, stationarity_residual,
    z_alpha_mean,
)
from environment.density import c_alpha, default_truncation, v_alpha_closed, z_alpha_estimate
from environment.view import EnvView, generator_apply, shift
from trees.arena import MeasureKind, TreeArena
from trees.martingales import w_beyond, w_estimate
from trees.samplers import sample_gw


class ClosedFormTest(SimpleTestCase):
    """Test the closed-form normaliser and velocity for α < 0"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.mixed = OffspringDist.parse('2:0.5,3:0.5')

    def test_binary_values(self):
        """Test C_α = 1/(1-e^α) on the binary tree"""
        self.assertAlmostEqual(c_alpha(self.binary, -0.5), 2.541494, places=5)
        self.assertAlmostEqual(v_alpha_closed(self.binary, -0.5), -1.297443, places=5)

    def test_mixed_values(self):
        """Test C_α and v_α for a two-point law"""
        self.assertAlmostEqual(c_alpha(self.mixed, -0.5), 2.6229, places=3)
        self.assertAlmostEqual(v_alpha_closed(self.mixed, -0.5), -1.5715, places=3)

    def test_positive_alpha_rejected(self):
        """Test C_α needs α < 0"""
        with self.assertRaises(DomainError):
            c_alpha(self.binary, 0.1)

    def test_default_truncation(self):
        """Test the ray truncation depth"""
        self.assertEqual(default_truncation(-0.5), 16)


class EnvViewTest(SimpleTestCase):
    """Test re-rooted views and the generator"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.source = RngStream(3, 0).source()

    def test_shift_and_back(self):
        """Test shifting to a child and back returns the same view"""
        tree = sample_gw(self.binary, 2, self.source)
        env = EnvView.of(tree)
        child = tree.children[tree.root][0]
        moved = shift(env, child)
        self.assertEqual(moved.rho(tree.root), -1)
        self.assertEqual(shift(moved, tree.root), env)
        self.assertEqual(hash(shift(moved, tree.root)), hash(env))

    def test_shift_not_adjacent(self):
        """Test shifting to a grandchild raises NotAdjacent"""
        tree = sample_gw(self.binary, 2, self.source)
        grandchild = tree.children[tree.children[tree.root][0]][0]
        with self.assertRaises(NotAdjacent):
            shift(EnvView.of(tree), grandchild)

    def test_shift_to_grown_parent(self):
        """Test moving up from the top of an IGW ray grows the ancestor first"""
        env = EnvView.of(TreeArena(self.binary, MeasureKind.IGW))
        root = env.current
        up = shift(env, source=self.source)
        self.assertEqual(len(env.ray()), 2)
        self.assertEqual(up.current, env.ray()[1])
        self.assertEqual(up.rho(root), 1)
        self.assertEqual(up.degree(self.source), 2)
        self.assertEqual(shift(up, root), env)

    def test_shift_up_without_parent(self):
        """Test moving up from an ungrown top without a source raises NotAdjacent"""
        env = EnvView.of(TreeArena(self.binary, MeasureKind.IGW))
        with self.assertRaises(NotAdjacent):
            shift(env)
        tree = sample_gw(self.binary, 1, self.source)
        with self.assertRaises(NotAdjacent):
            shift(EnvView.of(tree), source=self.source)

    def test_generator_constant(self):
        """Test L_α annihilates constants"""
        env = EnvView.of(TreeArena(self.binary, MeasureKind.IGW))
        self.assertEqual(generator_apply(env, lambda view: 1.0, -0.5, self.source), 0.0)

    def test_generator_degree_regular(self):
        """Test L_α of the degree vanishes on a regular tree"""
        env = EnvView.of(TreeArena(self.binary, MeasureKind.IGW))
        value = generator_apply(env, lambda view: view.degree(self.source), -0.5, self.source)
        self.assertEqual(value, 0.0)

    def test_ray_grows(self):
        """Test the ray of an IGW view grows with the parent"""
        env = EnvView.of(TreeArena(self.binary, MeasureKind.IGW))
        env.parent(self.source)
        self.assertEqual(len(env.ray()), 2)


class DensityTest(SimpleTestCase):
    """Test the truncated Z_α on regular trees"""

    def test_z_alpha_binary(self):
        """Test Z_α is a geometric sum when every W equals one"""
        binary = OffspringDist.new({2: 1.0})
        env = EnvView.of(TreeArena(binary, MeasureKind.IGW))
        result = z_alpha_estimate(env, -0.5, RngStream(1, 0).source(), j_max=3, depth=3)
        expected = sum(math.exp(-0.5 * j) for j in range(4))
        self.assertAlmostEqual(result.z_alpha, expected)
        self.assertAlmostEqual(result.psi, expected * (1.0 - math.exp(-0.5)))
        self.assertEqual(result.truncation_j, 3)

    def test_z_alpha_default_depth_mixed(self):
        """Test default truncation and martingale depth only grow the ray on a random law"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        tree = TreeArena(mixed, MeasureKind.IGW)
        result = z_alpha_estimate(EnvView.of(tree), -0.5, RngStream(2, 0).source())
        self.assertEqual(result.truncation_j, 16)
        self.assertEqual(result.martingale_depth, settings.GWLAB['MARTINGALE_DEPTH'])
        self.assertGreater(result.z_alpha, 0.0)
        self.assertEqual(len(tree.ancestors(tree.root)), 16)
        self.assertLess(len(tree), 100)

    def test_z_alpha_mean_mixed(self):
        """Test Z_α averages to C_α over fresh IGW trees on a random law"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        source = RngStream(4, 0).source()
        values, slack = [], 0.0
        for _ in range(200):
            env = EnvView.of(TreeArena(mixed, MeasureKind.IGW))
            result = z_alpha_estimate(env, -0.5, source, depth=12)
            values.append(result.z_alpha)
            slack = result.truncation_error
        self.assertTrue(estimate(values).covers(c_alpha(mixed, -0.5), sigmas=4.0, slack=slack))

    def test_w_beyond_on_grown_tree(self):
        """Test W past the grown part equals the exact count when nothing is left to draw"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        source = RngStream(6, 0).source()
        tree = sample_gw(mixed, 3, source)
        self.assertAlmostEqual(w_beyond(tree, tree.root, 3, source.generator).value,
                               w_estimate(tree, tree.root, 3).value)
        self.assertGreater(w_beyond(tree, tree.root, 6, source.generator).value, 0.0)

    def test_z_alpha_needs_negative_alpha(self):
        """Test Z_α at α ≥ 0 raises DomainError"""
        env = EnvView.of(TreeArena(OffspringDist.new({2: 1.0}), MeasureKind.IGW))
        with self.assertRaises(DomainError):
            z_alpha_estimate(env, 0.0, RngStream(1, 0).source())


class EnvironmentCheckTest(SimpleTestCase):
    """Test batched environment checks on the binary tree"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})

    def test_z_alpha_mean(self):
        """Test ⟨Z_α⟩ is the truncated geometric sum"""
        report = z_alpha_mean(self.binary, -0.5, samples=16, j_max=5, depth=3)
        expected = sum(math.exp(-0.5 * j) for j in range(6))
        self.assertAlmostEqual(report.z.mean, expected)
        self.assertAlmostEqual(report.c_alpha, 1.0 / (1.0 - math.exp(-0.5)))

    def test_ancestor_moments(self):
        """Test every W_{-j} is one on the binary tree"""
        table = ancestor_moments(self.binary, js=(0, 1, 3), samples=16, depth=3)
        for j, (result, expected) in table.items():
            self.assertAlmostEqual(result.mean, 1.0)
            self.assertAlmostEqual(expected, 1.0)

    def test_exact_residuals(self):
        """Test residuals that are exact on the binary tree vanish"""
        table = stationarity_residual(
            self.binary, -0.5, test_fns=('constant', 'degree', 'w_root'), samples=16, j_max=4, depth=3,
        )
        for result in table.values():
            self.assertAlmostEqual(result.mean, 0.0)

    def test_explicit_residual_binary(self):
        """Test the residual through explicit shifts vanishes on the binary tree"""
        table = stationarity_residual(self.binary, -0.5, test_fns=('explicit_degree',), samples=16, j_max=4, depth=3)
        self.assertEqual(list(table), ['explicit_degree'])
        self.assertAlmostEqual(table['explicit_degree'].mean, 0.0)
        self.assertEqual(table['explicit_degree'].n, 16)

    def test_residuals_mixed(self):
        """Test ⟨ψ_α L_α f⟩ is centred on a random law at α = -0.3"""
        mixed = OffspringDist.parse('2:0.5,3:0.5')
        table = stationarity_residual(mixed, -0.3, test_fns=('degree', 'w_root'), samples=4096, depth=12, seed=1)
        explicit = stationarity_residual(mixed, -0.3, test_fns=('explicit_degree',), samples=200, depth=12, seed=1)
        table.update(explicit)
        self.assertEqual(table['explicit_degree'].n, 200)
        for name, result in table.items():
            self.assertTrue(result.covers(0.0, sigmas=4.0), f'{name}: {result.mean} +- {result.stderr}')

    def test_unknown_test_function(self):
        """Test unknown test functions are rejected"""
        with self.assertRaises(ValueError):
            stationarity_residual(self.binary, -0.5, test_fns=('cosine',), samples=16)

    def test_singular_sum(self):
        """Test the binary singular sum is 1 - e^{α J}"""
        result, tail = gw_singular_psi_check(self.binary, -0.5, j_max=10, samples=8)
        self.assertAlmostEqual(result.mean, 1.0 - math.exp(-5.0))
        self.assertAlmostEqual(tail, math.exp(-5.0))

    def test_singular_needs_negative_alpha(self):
        """Test α ≥ 0 raises DomainError"""
        with self.assertRaises(DomainError):
            gw_singular_psi_check(self.binary, 0.5)

    def test_mu_infinity_normalization(self):
        """Test Σ μ_∞ = 1 on the binary tree"""
        report = mu_infinity_velocity(self.binary, samples=16, horizon=5.0, replicas=4)
        self.assertAlmostEqual(report.normalization.mean, 1.0)
        self.assertAlmostEqual(report.inverse, 2.0)

    def test_psi_trend_keys(self):
        """Test ψ trend rows come back sorted by α"""
        rows = psi_trend(self.binary, alphas=(-0.1, -0.2), samples=8, depth=3)
        self.assertEqual(list(rows), [-0.2, -0.1])

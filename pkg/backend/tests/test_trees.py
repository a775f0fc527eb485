import numpy as np
from django.test import SimpleTestCase

from gwlab.exceptions import ArenaOverflow, InsufficientDepth, NotFrontier
from montecarlo.rng import RngStream
from offspring.distribution import OffspringDist
from trees.arena import NO_PARENT, MeasureKind, TreeArena
from trees.martingales import m_estimate, q_progeny, sample_ray_profiles, w_estimate, w_samples
from trees.samplers import sample_gw, sample_igw, sample_spine_q


class TreeArenaTest(SimpleTestCase):
    """Test the lazily grown arena"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.mixed = OffspringDist.parse('2:0.5,3:0.5')
        self.source = RngStream(5, 0).source()

    def test_root_is_frontier(self):
        """Test a fresh arena has one unexpanded root"""
        tree = TreeArena(self.binary)
        self.assertEqual(len(tree), 1)
        self.assertTrue(tree.is_frontier(tree.root))
        self.assertEqual(tree.parent[tree.root], NO_PARENT)

    def test_expand_twice_raises(self):
        """Test expanding an expanded node raises NotFrontier"""
        tree = TreeArena(self.binary)
        tree.expand(tree.root, self.source)
        with self.assertRaises(NotFrontier):
            tree.expand(tree.root, self.source)

    def test_sample_gw_level_sizes(self):
        """Test a binary tree has 2^k vertices on level k"""
        tree = sample_gw(self.binary, 4, self.source)
        self.assertEqual([len(row) for row in tree.levels(tree.root, 4)], [1, 2, 4, 8, 16])
        self.assertEqual(len(tree), 31)

    def test_node_cap(self):
        """Test the arena refuses to grow past its cap"""
        with self.assertRaises(ArenaOverflow):
            sample_gw(self.binary, 10, self.source, node_cap=100)

    def test_igw_ancestors(self):
        """Test IGW ancestors sit on negative levels and keep the old top as a child"""
        tree = sample_igw(self.mixed, 3, 1, self.source)
        line = tree.ancestors(tree.root)
        self.assertEqual(len(line), 3)
        self.assertEqual([tree.depth[v] for v in line], [-1, -2, -3])
        self.assertIn(tree.root, tree.children[line[0]])
        self.assertTrue(all(tree.on_ray[v] for v in line))

    def test_grow_ancestor_only_for_igw(self):
        """Test GW trees do not grow ancestors"""
        with self.assertRaises(NotFrontier):
            TreeArena(self.binary).grow_ancestor(self.source)

    def test_spine_q_marks_one_child_per_level(self):
        """Test the spine measure marks a single descending ray"""
        tree = sample_spine_q(self.mixed, 5, self.source)
        spine = tree.spine()
        self.assertEqual(len(spine), 6)
        self.assertEqual([tree.depth[v] for v in spine], list(range(6)))

    def test_dump_format(self):
        """Test the debug dump has one line per node"""
        tree = sample_gw(self.binary, 1, self.source)
        lines = tree.dump().splitlines()
        self.assertEqual(lines[0], '0 -1 0 0 2')
        self.assertEqual(len(lines), 3)


class MartingaleTest(SimpleTestCase):
    """Test W and M martingales"""

    def setUp(self):
        self.binary = OffspringDist.new({2: 1.0})
        self.mixed = OffspringDist.parse('2:0.5,3:0.5')

    def test_w_regular_tree(self):
        """Test W(o, n) = 1 on a regular tree"""
        tree = sample_gw(self.binary, 5, RngStream(1, 0).source())
        self.assertAlmostEqual(w_estimate(tree, tree.root, 5).value, 1.0)

    def test_w_needs_depth(self):
        """Test W beyond the expanded depth raises InsufficientDepth"""
        tree = sample_gw(self.binary, 2, RngStream(1, 0).source())
        with self.assertRaises(InsufficientDepth):
            w_estimate(tree, tree.root, 3)

    def test_m_estimate_child(self):
        """Test M_n of a level-one vertex on a regular tree"""
        tree = sample_gw(self.binary, 4, RngStream(1, 0).source())
        child = tree.children[tree.root][0]
        self.assertAlmostEqual(m_estimate(tree, child, 4).value, 1.0)

    def test_w_samples_regular(self):
        """Test population samples of a point mass are exactly one"""
        draws = w_samples(self.binary, 20, RngStream(2, 0).generator(), 50)
        np.testing.assert_allclose(draws.values, 1.0)
        self.assertEqual(draws.convergence_gap, 0.0)

    def test_w_samples_mean(self):
        """Test E[W] = 1 within 4 sigma"""
        draws = w_samples(self.mixed, 12, RngStream(3, 0).generator(), 4000)
        stderr = draws.values.std(ddof=1) / np.sqrt(draws.values.size)
        self.assertLess(abs(draws.values.mean() - 1.0), 4 * stderr)

    def test_ray_profiles_regular(self):
        """Test every W_{-j} equals one on a regular IGW tree"""
        profiles = sample_ray_profiles(self.binary, 4, 6, RngStream(4, 0).generator(), 10)
        np.testing.assert_allclose(profiles.w_ray, 1.0)
        self.assertTrue(np.all(profiles.ray_degree == 2))
        self.assertEqual(len(profiles), 10)

    def test_q_progeny_regular(self):
        """Test M_n(o) = 1 under Q for a regular tree"""
        np.testing.assert_allclose(q_progeny(self.binary, 6, RngStream(6, 0).generator(), 5), 1.0)

    def test_q_inverse_progeny_mean(self):
        """Test Q-mean of 1/M_n is one within 4 sigma"""
        values = 1.0 / q_progeny(self.mixed, 8, RngStream(7, 0).generator(), 4000)
        stderr = values.std(ddof=1) / np.sqrt(values.size)
        self.assertLess(abs(values.mean() - 1.0), 4 * stderr)

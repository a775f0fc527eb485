import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy import stats

from montecarlo.rng import RngStream
from offspring.distribution import OffspringDist, parse_offspring
from offspring.exceptions import (
    DuplicateOffspring, NegativeProbability, NotNormalized, SubcriticalMean, ZeroOffspringMass,
)


class OffspringValidationTest(SimpleTestCase):
    """Test validation of offspring laws"""

    def test_parse_mixed_law(self):
        """Test parsing a two-point law"""
        dist = OffspringDist.parse('2:0.5,3:0.5')
        self.assertEqual(dist.probs, ((2, 0.5), (3, 0.5)))
        self.assertEqual(str(dist), '2:0.5,3:0.5')

    def test_parse_exact_decimal_sum(self):
        """Test decimal probabilities that sum to one exactly"""
        dist = OffspringDist.parse('2:0.25,3:0.25,4:0.5')
        self.assertAlmostEqual(dist.mean, 3.25)

    def test_zero_offspring_rejected(self):
        """Test p_0 > 0 is rejected"""
        with self.assertRaises(ZeroOffspringMass):
            OffspringDist.new({0: 0.1, 2: 0.9})

    def test_not_normalized(self):
        """Test probabilities must sum to one"""
        with self.assertRaises(NotNormalized):
            OffspringDist.parse('2:0.5,3:0.4')

    def test_subcritical_mean(self):
        """Test mean offspring must exceed one"""
        with self.assertRaises(SubcriticalMean):
            OffspringDist.new({1: 1.0})

    def test_negative_probability(self):
        """Test negative probabilities are rejected"""
        with self.assertRaises(NegativeProbability):
            OffspringDist.new({2: 1.5, 3: -0.5})

    def test_duplicate_entry(self):
        """Test the same offspring count cannot be given twice"""
        with self.assertRaises(DuplicateOffspring):
            OffspringDist.parse('2:0.5,2:0.5')

    def test_errors_are_validation_errors(self):
        """Test offspring errors carry a validation code"""
        with self.assertRaises(ValidationError) as ctx:
            parse_offspring('2:0.3')
        self.assertEqual(ctx.exception.code, 'not_normalized')

    def test_parse_offspring_accepts_mapping(self):
        """Test parse_offspring accepts a mapping and passes laws through"""
        dist = parse_offspring({2: 1.0})
        self.assertIs(parse_offspring(dist), dist)
        self.assertTrue(dist.is_point_mass)


class ModelConstantsTest(SimpleTestCase):
    """Test constants derived from the offspring law"""

    def setUp(self):
        self.dist = OffspringDist.parse('2:0.5,3:0.5')

    def test_mixed_law_constants(self):
        """Test m, E[d(d-1)], b, D0 and C for {2:0.5,3:0.5}"""
        c = self.dist.constants()
        self.assertAlmostEqual(c.m, 2.5)
        self.assertAlmostEqual(c.m2, 6.5)
        self.assertAlmostEqual(c.edd1, 4.0)
        self.assertAlmostEqual(c.b, 1.0666666666666667)
        self.assertAlmostEqual(c.d0, 4.6875)
        self.assertAlmostEqual(c.c_harmonic, 0.4166666666666667)

    def test_limit_slopes(self):
        """Test the Einstein and escape slopes"""
        c = self.dist.constants()
        self.assertAlmostEqual(c.einstein_slope, 2.34375)
        self.assertAlmostEqual(c.escape_slope, 0.9375)

    def test_point_mass_constants(self):
        """Test regular trees: b = 1 and D0 = 2d"""
        for d in (2, 3):
            c = OffspringDist.new({d: 1.0}).constants()
            self.assertAlmostEqual(c.b, 1.0)
            self.assertAlmostEqual(c.d0, 2.0 * d)
            self.assertAlmostEqual(c.c_harmonic, 1.0 / d)

    def test_size_biased(self):
        """Test size-biased law k p_k / m"""
        biased = self.dist.size_biased()
        self.assertEqual(biased.ks.tolist(), [2, 3])
        np.testing.assert_allclose(biased.ps, [0.4, 0.6])

    def test_bias_rate(self):
        """Test λ = m e^{-α}"""
        self.assertAlmostEqual(self.dist.bias_rate(0.0), 2.5)
        self.assertAlmostEqual(self.dist.bias_rate(np.log(2.5)), 1.0)


class OffspringSamplingTest(SimpleTestCase):
    """Test alias-table sampling"""

    def test_samples_stay_in_support(self):
        """Test every draw is a supported offspring count"""
        dist = OffspringDist.parse('2:0.2,5:0.8')
        draws = dist.sample_many(RngStream(3, 0).generator(), 1000)
        self.assertTrue(set(draws.tolist()) <= {2, 5})

    def test_point_mass_sampling(self):
        """Test a point mass always returns its value, also size-biased"""
        dist = OffspringDist.new({3: 1.0})
        source = RngStream(1, 0).source()
        self.assertEqual({dist.sample(source) for _ in range(50)}, {3})
        self.assertEqual({dist.sample_size_biased(source) for _ in range(50)}, {3})

    def test_sampling_frequencies(self):
        """Test empirical frequencies with a chi-square test"""
        dist = OffspringDist.parse('2:0.5,3:0.3,4:0.2')
        draws = dist.sample_many(RngStream(11, 0).generator(), 20000)
        observed = [np.sum(draws == k) for k in (2, 3, 4)]
        _, p_value = stats.chisquare(observed, [10000, 6000, 4000])
        self.assertGreater(p_value, 1e-4)

    def test_size_biased_frequencies(self):
        """Test size-biased frequencies with a chi-square test"""
        dist = OffspringDist.parse('2:0.5,3:0.5')
        draws = dist.sample_size_biased_many(RngStream(12, 0).generator(), 20000)
        observed = [np.sum(draws == k) for k in (2, 3)]
        _, p_value = stats.chisquare(observed, [8000, 12000])
        self.assertGreater(p_value, 1e-4)
